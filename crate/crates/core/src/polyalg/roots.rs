//! Root finding (companion matrix + Newton polishing) and multiplicity
//! clustering.

use super::poly::Polynomial;
use super::scalar::{Scalar, C, Q};
use super::PolyError;
use nalgebra::DMatrix;
use serde::Serialize;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct RootCluster {
    pub center: C,
    pub multiplicity: usize,
    pub member_roots: Vec<C>,
}

impl RootCluster {
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.member_roots {
            for b in &self.member_roots {
                d = d.max((a - b).norm());
            }
        }
        d
    }
}

fn eval_c(coeffs: &[C], z: C) -> C {
    coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn deriv_c(coeffs: &[C]) -> Vec<C> {
    coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

/// `sum |c_j| |z|^j`, the natural rounding scale of Horner evaluation at `z`.
fn eval_scale(coeffs: &[C], z: C) -> f64 {
    let r = z.norm();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Raw eigenvalues of the companion matrix of a complex polynomial.
fn companion_roots(coeffs: &[C]) -> Result<Vec<C>, PolyError> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    // leading zero roots are exact; peel them so the companion is nonsingular
    let zeros = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let trimmed = &coeffs[zeros..];
    let k = trimmed.len() - 1;
    let mut out = vec![C::new(0.0, 0.0); zeros];
    if k == 0 {
        return Ok(out);
    }
    if k == 1 {
        out.push(-trimmed[0] / trimmed[1]);
        return Ok(out);
    }
    let real = trimmed.iter().all(|c| c.im == 0.0);
    if real {
        let mut m = DMatrix::<f64>::zeros(k, k);
        for i in 1..k {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..k {
            m[(i, k - 1)] = -(trimmed[i] / lead).re;
        }
        match m.try_schur(1e-15, 10_000) {
            Some(schur) => out.extend(schur.complex_eigenvalues().iter().copied()),
            // unshifted QR can stall on highly defective companions
            None => out.extend(aberth(trimmed)?),
        }
    } else {
        let mut m = DMatrix::<C>::zeros(k, k);
        for i in 1..k {
            m[(i, i - 1)] = C::new(1.0, 0.0);
        }
        for i in 0..k {
            m[(i, k - 1)] = -trimmed[i] / lead;
        }
        match m.try_schur(1e-15, 10_000) {
            Some(schur) => {
                let (_, t) = schur.unpack();
                out.extend((0..k).map(|i| t[(i, i)]));
            }
            None => out.extend(aberth(trimmed)?),
        }
    }
    Ok(out)
}

/// Aberth-Ehrlich simultaneous iteration, the fallback when QR stalls.
fn aberth(coeffs: &[C]) -> Result<Vec<C>, PolyError> {
    let n = coeffs.len() - 1;
    let d = deriv_c(coeffs);
    let lead = coeffs[n].norm();
    // Cauchy bound for the starting circle
    let radius = 1.0 + coeffs[..n].iter().map(|c| c.norm() / lead).fold(0.0, f64::max);
    let mut z: Vec<C> = (0..n)
        .map(|k| C::from_polar(radius * 0.5, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let pz = eval_c(coeffs, z[i]);
            if pz.norm() == 0.0 {
                continue;
            }
            let ratio = pz / eval_c(&d, z[i]);
            let s: C = (0..n).filter(|&j| j != i).map(|j| C::new(1.0, 0.0) / (z[i] - z[j])).sum();
            let w = ratio / (C::new(1.0, 0.0) - ratio * s);
            if w.re.is_finite() && w.im.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            return Ok(z);
        }
    }
    // multiple roots converge slowly but the iterate is still the best estimate
    if z.iter().all(|w| w.re.is_finite() && w.im.is_finite()) {
        Ok(z)
    } else {
        Err(PolyError::NoConvergence(format!("Aberth iteration diverged for degree {n}")))
    }
}

/// Newton steps accepted only while they reduce |p|.
fn polish(coeffs: &[C], z0: C) -> C {
    let d = deriv_c(coeffs);
    let mut z = z0;
    let mut fz = eval_c(coeffs, z).norm();
    for _ in 0..60 {
        let dp = eval_c(&d, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = eval_c(coeffs, z) / dp;
        let zn = z - step;
        let fn_ = eval_c(coeffs, zn).norm();
        if !(fn_ < fz) {
            break;
        }
        z = zn;
        fz = fn_;
        if step.norm() <= 1e-17 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// All roots of `p` (with repetition) to floating precision.
pub fn roots<S: Scalar>(p: &Polynomial<S>) -> Result<Vec<C>, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let coeffs: Vec<C> = p.coeffs().iter().map(|c| c.to_complex()).collect();
    let raw = companion_roots(&coeffs)?;
    let out: Vec<C> = raw.into_iter().map(|z| polish(&coeffs, z)).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(PolyError::NoConvergence(format!("non-finite root among {out:?}")));
    }
    Ok(out)
}

fn sort_key(z: &C) -> (f64, f64) {
    (z.re, z.im)
}

fn lex_cmp(a: &C, b: &C) -> std::cmp::Ordering {
    sort_key(a).partial_cmp(&sort_key(b)).unwrap_or(std::cmp::Ordering::Equal)
}

fn mean(v: &[C]) -> C {
    v.iter().sum::<C>() / v.len() as f64
}

/// Floating resolution of a k-fold root of `coeffs` near `c`: the radius at
/// which rounding in Horner evaluation swamps the k-th Taylor term.
fn multiple_root_radius(coeffs: &[C], c: C, k: usize) -> f64 {
    let mut dk = coeffs.to_vec();
    let mut fact = 1.0;
    for j in 0..k {
        dk = deriv_c(&dk);
        fact *= (j + 1) as f64;
    }
    let bk = eval_c(&dk, c).norm() / fact;
    if bk == 0.0 {
        return 0.0;
    }
    let eps = 64.0 * f64::EPSILON * eval_scale(coeffs, c);
    4.0 * (eps / bk).powf(1.0 / k as f64)
}

/// Roots grouped into clusters of diameter below `tol`. Clusters are sorted
/// lexicographically by (Re, Im) of their centers.
///
/// Exact inputs are split into square-free parts first, so multiplicities are
/// exact. Floating inputs are grouped by distance; a group is also accepted
/// when its spread is within the floating resolution of a root of that
/// multiplicity, since a k-fold root only resolves to about eps^(1/k).
pub fn roots_clustered<S: Scalar>(p: &Polynomial<S>, tol: f64) -> Result<Vec<RootCluster>, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let mut clusters: Vec<RootCluster> = if S::EXACT {
        let pq: Polynomial<Q> = p.map(|c| c.to_rational().expect("exact scalar"));
        let mut out = vec![];
        for (i, part) in pq.squarefree_parts().iter().enumerate() {
            if part.degree().unwrap_or(0) == 0 {
                continue;
            }
            for r in roots(part)? {
                out.push(RootCluster { center: r, multiplicity: i + 1, member_roots: vec![r; i + 1] });
            }
        }
        out
    } else {
        roots(p)?
            .into_iter()
            .map(|r| RootCluster { center: r, multiplicity: 1, member_roots: vec![r] })
            .collect()
    };

    let coeffs: Vec<C> = p.coeffs().iter().map(|c| c.to_complex()).collect();
    // agglomerate: merge any pair whose union is tight enough
    loop {
        let mut merged = false;
        'outer: for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let mut members = clusters[i].member_roots.clone();
                members.extend(clusters[j].member_roots.iter().copied());
                let c = mean(&members);
                let k = members.len();
                let spread = members.iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
                let close = (clusters[i].center - clusters[j].center).norm() < tol;
                let radius = if S::EXACT { 0.0 } else { multiple_root_radius(&coeffs, c, k) };
                if close || spread < radius {
                    let mult = clusters[i].multiplicity + clusters[j].multiplicity;
                    clusters[i] = RootCluster { center: c, multiplicity: mult, member_roots: members };
                    clusters.remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }

    // refine centers of floating multiple roots on p^(k-1), where they are simple
    if !S::EXACT {
        for cl in clusters.iter_mut().filter(|c| c.multiplicity > 1) {
            let mut d = coeffs.clone();
            for _ in 0..cl.multiplicity - 1 {
                d = deriv_c(&d);
            }
            let z = polish(&d, cl.center);
            if (z - cl.center).norm() <= cl.diameter().max(tol) {
                cl.center = z;
            }
        }
    }

    for cl in clusters.iter_mut() {
        cl.member_roots.sort_by(lex_cmp);
    }
    clusters.sort_by(|a, b| lex_cmp(&a.center, &b.center));
    Ok(clusters)
}

#[cfg(test)]
mod tests {
    use super::super::poly::qpoly;
    use super::super::scalar::qi;
    use super::*;

    #[test]
    fn simple_real_roots() {
        let cl = roots_clustered(&qpoly(&[-1, 0, 1]), 1e-8).unwrap();
        assert_eq!(cl.len(), 2);
        assert!((cl[0].center - C::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((cl[1].center - C::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn exact_triple_root() {
        let p = Polynomial::from_roots(&[(qi(1), 3), (qi(-2), 1)]);
        let cl = roots_clustered(&p, 1e-6).unwrap();
        assert_eq!(cl.len(), 2);
        assert_eq!((cl[0].multiplicity, cl[1].multiplicity), (1, 3));
        assert!((cl[1].center - C::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn noisy_triple_root() {
        let p = Polynomial::from_roots(&[(qi(1), 3), (qi(-2), 1)]);
        let mut pc = p.map(|c| c.to_complex());
        // double-precision noise on every coefficient
        pc = Polynomial::new(
            pc.coeffs().iter().enumerate().map(|(i, c)| c * (1.0 + 1e-15 * (i as f64 - 1.5))).collect(),
        );
        let cl = roots_clustered(&pc, 1e-6).unwrap();
        assert_eq!(cl.len(), 2, "{cl:?}");
        assert_eq!(cl[1].multiplicity, 3);
        assert!((cl[1].center - C::new(1.0, 0.0)).norm() < 1e-9);
        assert!((cl[0].center - C::new(-2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pure_power() {
        let cl = roots_clustered(&qpoly(&[0, 0, 0, 1]), 1e-7).unwrap();
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].multiplicity, 3);
    }

    #[test]
    fn complex_coefficients() {
        // (z - i)(z - 2 + i)
        let a = C::new(0.0, 1.0);
        let b = C::new(2.0, -1.0);
        let p = Polynomial::from_roots(&[(a, 1), (b, 1)]);
        let cl = roots_clustered(&p, 1e-7).unwrap();
        assert!((cl[0].center - a).norm() < 1e-13);
        assert!((cl[1].center - b).norm() < 1e-13);
    }

    #[test]
    fn distinct_close_roots_stay_apart() {
        let p = Polynomial::from_roots(&[(C::new(1.0, 0.0), 1), (C::new(1.001, 0.0), 1)]);
        let cl = roots_clustered(&p, 1e-7).unwrap();
        assert_eq!(cl.len(), 2);
    }
}
