//! Finite differences, seeded sampling and small dense complex linear algebra.

use crate::polyalg::{Scalar, C};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<C>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform real in `[lo, hi)`.
pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.gen_range(lo..hi)
}

fn axpy(a: &[C], b: &[C], s: C) -> Vec<C> {
    a.iter().zip(b).map(|(x, y)| x + y * s).collect()
}

/// Central difference of a holomorphic vector function along coordinate `i`,
/// Richardson-extrapolated once: `(4 D(h/2) - D(h)) / 3`.
pub fn diff<F>(f: &F, x: &[C], i: usize, h: f64) -> Vec<C>
where
    F: Fn(&[C]) -> Vec<C>,
{
    let d = |h: f64| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<C>>()
    };
    let (d1, d2) = (d(h), d(h / 2.0));
    axpy(&d2.iter().map(|v| v * (4.0 / 3.0)).collect::<Vec<_>>(), &d1, C::new(-1.0 / 3.0, 0.0))
}

/// Mixed second derivative along coordinates `i`, `j`, Richardson-extrapolated.
pub fn diff2<F>(f: &F, x: &[C], i: usize, j: usize, h: f64) -> Vec<C>
where
    F: Fn(&[C]) -> Vec<C>,
{
    let d = |h: f64| -> Vec<C> {
        if i == j {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let (fp, f0, fm) = (f(&xp), f(x), f(&xm));
            (0..f0.len()).map(|k| (fp[k] - f0[k] * 2.0 + fm[k]) / (h * h)).collect()
        } else {
            let at = |si: f64, sj: f64| {
                let mut y = x.to_vec();
                y[i] += si * h;
                y[j] += sj * h;
                f(&y)
            };
            let (pp, pm, mp, mm) = (at(1.0, 1.0), at(1.0, -1.0), at(-1.0, 1.0), at(-1.0, -1.0));
            (0..pp.len()).map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h * h)).collect()
        }
    };
    let (d1, d2) = (d(h), d(h / 2.0));
    (0..d1.len()).map(|k| (d2[k] * 4.0 - d1[k]) / 3.0).collect()
}

/// Scalar convenience wrapper around [`diff`].
pub fn diff_scalar<F>(f: &F, x: &[C], i: usize, h: f64) -> C
where
    F: Fn(&[C]) -> C,
{
    diff(&|y: &[C]| vec![f(y)], x, i, h)[0]
}

pub fn cmat(rows: &[Vec<C>]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn to_rows(m: &CMat) -> Vec<Vec<C>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn c(x: f64) -> C {
    C::new(x, 0.0)
}

/// Gauss-Jordan inverse with magnitude pivoting; exact for exact scalars.
pub fn inverse<S: Scalar>(m: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = m.len();
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut inv: Vec<Vec<S>> = (0..n).map(|i| (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect()).collect();
    for col in 0..n {
        let piv = (col..n).filter(|&r| !a[r][col].is_zero()).max_by(|&x, &y| {
            a[x][col].magnitude().partial_cmp(&a[y][col].magnitude()).unwrap_or(std::cmp::Ordering::Equal)
        })?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].clone() / p.clone();
            inv[col][j] = inv[col][j].clone() / p.clone();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].clone() - f.clone() * a[col][j].clone();
                inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some(inv)
}

/// Solve `m x = b`.
pub fn solve<S: Scalar>(m: &[Vec<S>], b: &[S]) -> Option<Vec<S>> {
    let inv = inverse(m)?;
    Some(inv.iter().map(|row| row.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())).collect())
}

/// Determinant by permutation expansion over any ring (small matrices only).
pub fn det_ring<R, F>(m: &[Vec<R>], zero: R, one: R, mul: F) -> R
where
    R: Clone + std::ops::Add<Output = R> + std::ops::Sub<Output = R>,
    F: Fn(&R, &R) -> R,
{
    let n = m.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut acc = zero.clone();
    permute(&mut perm, 0, &mut |p: &[usize]| {
        let mut inv = 0;
        for i in 0..n {
            for j in i + 1..n {
                if p[i] > p[j] {
                    inv += 1;
                }
            }
        }
        let mut t = one.clone();
        for (i, &pi) in p.iter().enumerate() {
            t = mul(&t, &m[i][pi]);
        }
        acc = if inv % 2 == 0 { acc.clone() + t } else { acc.clone() - t };
    });
    acc
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{qi, Q};

    #[test]
    fn derivatives_of_polynomial() {
        let f = |x: &[C]| vec![x[0] * x[0] * x[1], x[1].powi(3)];
        let x = [c(0.7), c(-1.3)];
        let d0 = diff(&f, &x, 0, 1e-3);
        assert!((d0[0] - x[0] * x[1] * 2.0).norm() < 1e-10);
        let d11 = diff2(&f, &x, 1, 1, 1e-3);
        assert!((d11[1] - x[1] * 6.0).norm() < 1e-7);
        let d01 = diff2(&f, &x, 0, 1, 1e-3);
        assert!((d01[0] - x[0] * 2.0).norm() < 1e-8);
    }

    #[test]
    fn exact_inverse_and_det() {
        let m = vec![vec![qi(2), qi(1)], vec![qi(5), qi(3)]];
        let inv = inverse(&m).unwrap();
        assert_eq!(inv, vec![vec![qi(3), qi(-1)], vec![qi(-5), qi(2)]]);
        let d = det_ring(&m, qi(0), qi(1), |a: &Q, b: &Q| a * b);
        assert_eq!(d, qi(1));
        assert!(inverse(&[vec![qi(1), qi(2)], vec![qi(2), qi(4)]]).is_none());
    }
}
