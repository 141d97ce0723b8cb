//! The A_m Frobenius manifold of polynomials
//! `p(z) = z^(m+1) + a_1 z^(m-1) + ... + a_m`.
//!
//! Tangent vectors are polynomials of degree at most `m-1` (the variation of
//! `p`), multiplied in `C[z]/p'(z)` and paired by the sum of finite residues
//! of `f g / p'`.

use crate::numerics::{self, det_ring};
use crate::polyalg::{
    finite_residue_sum, q, qi, quotient_multiply, roots, roots_clustered, PolyError, Polynomial, Scalar, C,
    DEFAULT_CLUSTER_TOL, Q,
};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Minimum pairwise gap of critical values for a point to count as semisimple.
pub const SEMISIMPLE_TOL: f64 = 1e-6;
/// Finite-difference step for chart Jacobians.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrobError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("point is not semisimple (min critical-value gap {min_gap:e}, multiplicities {multiplicities:?}); use the strata module")]
    OnStratum { min_gap: f64, multiplicities: Vec<usize> },
    #[error("critical value u^{index} vanishes; the intersection form degenerates on the discriminant")]
    OnDiscriminant { index: usize },
    #[error("frame is degenerate")]
    DegenerateFrame,
    #[error("flat coordinates are only available for m = 2, 3 (got m = {0})")]
    NoFlatChart(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Chart {
    FlatA,
    FlatT,
    Canonical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldingPoint<S> {
    pub m: usize,
    pub a: Vec<S>,
}

impl<S: Scalar> UnfoldingPoint<S> {
    pub fn new(a: Vec<S>) -> Self {
        UnfoldingPoint { m: a.len(), a }
    }

    /// `p(z)`
    pub fn superpotential(&self) -> Polynomial<S> {
        let m = self.m;
        let mut c = vec![S::zero(); m + 2];
        c[m + 1] = S::one();
        for (i, ai) in self.a.iter().enumerate() {
            c[m - 1 - i] = ai.clone();
        }
        Polynomial::new(c)
    }

    pub fn dp(&self) -> Polynomial<S> {
        self.superpotential().derivative()
    }

    /// Recover the point from a monic `p` of degree `m+1` with no `z^m` term.
    pub fn from_superpotential(p: &Polynomial<S>) -> Option<Self> {
        let d = p.degree()?;
        if d < 2 || !p.lead().is_one() || !p.coeff(d - 1).is_zero() {
            return None;
        }
        let m = d - 1;
        Some(Self::new((1..=m).map(|i| p.coeff(m - i)).collect()))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> UnfoldingPoint<T> {
        UnfoldingPoint { m: self.m, a: self.a.iter().map(f).collect() }
    }

    pub fn to_complex(&self) -> UnfoldingPoint<C> {
        self.map(|x| x.to_complex())
    }
}

/// Critical points `alpha_i` of `p` (roots of `p'`) and values `u^i = p(alpha_i)`,
/// ordered lexicographically by `alpha`.
#[derive(Clone, Debug, Serialize)]
pub struct CanonicalChart {
    pub u: Vec<C>,
    pub alphas: Vec<C>,
    pub multiplicities: Vec<usize>,
}

impl CanonicalChart {
    pub fn min_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for i in 0..self.u.len() {
            for j in i + 1..self.u.len() {
                g = g.min((self.u[i] - self.u[j]).norm());
            }
        }
        g
    }

    pub fn is_semisimple(&self) -> bool {
        self.multiplicities.iter().all(|&k| k == 1) && self.min_gap() > SEMISIMPLE_TOL
    }

    fn require_semisimple(&self) -> Result<(), FrobError> {
        if self.is_semisimple() {
            Ok(())
        } else {
            Err(FrobError::OnStratum { min_gap: self.min_gap(), multiplicities: self.multiplicities.clone() })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricTensor<S> {
    pub components: Vec<Vec<S>>,
    pub chart: Chart,
}

impl<S: Scalar> MetricTensor<S> {
    pub fn diagonal(d: Vec<S>, chart: Chart) -> Self {
        let n = d.len();
        let components = (0..n)
            .map(|i| (0..n).map(|j| if i == j { d[i].clone() } else { S::zero() }).collect())
            .collect();
        MetricTensor { components, chart }
    }

    pub fn diag(&self) -> Vec<S> {
        (0..self.components.len()).map(|i| self.components[i][i].clone()).collect()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.components.len();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.components[i][j].magnitude());
                }
            }
        }
        m
    }

    pub fn inverse(&self) -> Option<Vec<Vec<S>>> {
        numerics::inverse(&self.components)
    }
}

/// `<f, g>` = sum of finite residues of `f g / p'`.
pub fn tangent_pairing<S: Scalar>(pt: &UnfoldingPoint<S>, f: &Polynomial<S>, g: &Polynomial<S>) -> Result<S, FrobError> {
    Ok(finite_residue_sum(&(f * g), &pt.dp())?)
}

/// Gram matrix of a frame of tangent polynomials.
pub fn pairing_matrix<S: Scalar>(pt: &UnfoldingPoint<S>, frame: &[Polynomial<S>]) -> Result<Vec<Vec<S>>, FrobError> {
    let dp = pt.dp();
    frame
        .iter()
        .map(|f| frame.iter().map(|g| Ok(finite_residue_sum(&(f * g), &dp)?)).collect())
        .collect()
}

/// Product of tangent vectors, `f g mod p'`.
pub fn product<S: Scalar>(pt: &UnfoldingPoint<S>, f: &Polynomial<S>, g: &Polynomial<S>) -> Polynomial<S> {
    quotient_multiply(f, g, &pt.dp())
}

/// `c_ijk = <f_i f_j, f_k>`, i.e. the finite-residue sum of `f_i f_j f_k / p'`.
pub fn structure_constants<S: Scalar>(
    pt: &UnfoldingPoint<S>,
    frame: &[Polynomial<S>],
) -> Result<Vec<Vec<Vec<S>>>, FrobError> {
    let dp = pt.dp();
    let n = frame.len();
    let mut c = vec![vec![vec![S::zero(); n]; n]; n];
    for i in 0..n {
        for j in i..n {
            let fij = quotient_multiply(&frame[i], &frame[j], &dp);
            for k in j..n {
                let v = finite_residue_sum(&(&fij * &frame[k]), &dp)?;
                for (a, b, cc) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                    c[a][b][cc] = v.clone();
                }
            }
        }
    }
    Ok(c)
}

/// `dp/da_i = z^(m-i)`, `i = 1..m`.
pub fn a_frame<S: Scalar>(m: usize) -> Vec<Polynomial<S>> {
    (1..=m).map(|i| Polynomial::monomial(S::one(), m - i)).collect()
}

/// Canonical frame `dp/du^i`: the Lagrange polynomials on the critical points.
pub fn canonical_frame(chart: &CanonicalChart) -> Vec<Polynomial<C>> {
    let n = chart.alphas.len();
    (0..n)
        .map(|i| {
            let mut l = Polynomial::constant(C::new(1.0, 0.0));
            for j in 0..n {
                if j != i {
                    let lin = Polynomial::new(vec![-chart.alphas[j], C::new(1.0, 0.0)]);
                    l = (&l * &lin).scale(&(C::new(1.0, 0.0) / (chart.alphas[i] - chart.alphas[j])));
                }
            }
            l
        })
        .collect()
}

/// Components of a tangent polynomial in the canonical frame: its values at
/// the critical points.
pub fn canonical_components(chart: &CanonicalChart, f: &Polynomial<C>) -> Vec<C> {
    chart.alphas.iter().map(|a| f.eval(a)).collect()
}

/// Components in the `a`-frame: coefficient of `z^(m-i)`.
pub fn a_components<S: Scalar>(m: usize, f: &Polynomial<S>) -> Vec<S> {
    (1..=m).map(|i| f.coeff(m - i)).collect()
}

pub fn from_components<S: Scalar>(frame: &[Polynomial<S>], x: &[S]) -> Polynomial<S> {
    frame.iter().zip(x).fold(Polynomial::zero(), |acc, (f, c)| &acc + &f.scale(c))
}

fn build_chart<S: Scalar>(pt: &UnfoldingPoint<S>, tol: f64) -> Result<CanonicalChart, FrobError> {
    let p = pt.superpotential().map(|c| c.to_complex());
    let clusters = roots_clustered(&pt.dp(), tol)?;
    Ok(CanonicalChart {
        u: clusters.iter().map(|c| p.eval(&c.center)).collect(),
        alphas: clusters.iter().map(|c| c.center).collect(),
        multiplicities: clusters.iter().map(|c| c.multiplicity).collect(),
    })
}

/// Canonical coordinates `u^i = p(alpha_i)`. Repeated critical points show up
/// as multiplicities rather than errors.
pub fn canonical_chart<S: Scalar>(pt: &UnfoldingPoint<S>) -> Result<CanonicalChart, FrobError> {
    build_chart(pt, DEFAULT_CLUSTER_TOL)
}

/// Canonical chart whose roots are matched to `reference` critical points
/// instead of sorted, so nearby points get consistently labelled coordinates.
pub fn canonical_chart_near(pt: &UnfoldingPoint<C>, reference: &[C]) -> Result<CanonicalChart, FrobError> {
    let mut rs = roots(&pt.dp())?;
    let p = pt.superpotential();
    let mut alphas = Vec::with_capacity(reference.len());
    for r in reference {
        let (k, _) = rs
            .iter()
            .enumerate()
            .map(|(k, z)| (k, (z - r).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .ok_or(FrobError::DegenerateFrame)?;
        alphas.push(rs.remove(k));
    }
    Ok(CanonicalChart {
        u: alphas.iter().map(|a| p.eval(a)).collect(),
        multiplicities: vec![1; alphas.len()],
        alphas,
    })
}

/// `g_ii = 1/p''(alpha_i)`.
pub fn canonical_metric(chart: &CanonicalChart, pt: &UnfoldingPoint<C>) -> Result<MetricTensor<C>, FrobError> {
    chart.require_semisimple()?;
    let p2 = pt.dp().derivative();
    Ok(MetricTensor::diagonal(
        chart.alphas.iter().map(|a| C::new(1.0, 0.0) / p2.eval(a)).collect(),
        Chart::Canonical,
    ))
}

/// Euler and unity fields in the `a`-frame: `E = sum (i+1)/(m+1) a_i d/da_i`,
/// `e = d/da_m`.
pub fn euler_unity_a<S: Scalar>(pt: &UnfoldingPoint<S>) -> (Vec<S>, Vec<S>) {
    let m = pt.m;
    let e_field = pt
        .a
        .iter()
        .enumerate()
        .map(|(i, a)| a.clone() * S::from_rational(&q(i as i64 + 2, m as i64 + 1)))
        .collect();
    let mut unity = vec![S::zero(); m];
    unity[m - 1] = S::one();
    (e_field, unity)
}

/// Euler and unity fields in the chart requested. The canonical chart gives
/// `E = sum u^i d_i`, `e = sum d_i` directly; the others go through the frame.
pub fn euler_unity_fields(pt: &UnfoldingPoint<C>, chart: Chart) -> Result<(Vec<C>, Vec<C>), FrobError> {
    match chart {
        Chart::FlatA => Ok(euler_unity_a(pt)),
        Chart::Canonical => {
            let ch = canonical_chart(pt)?;
            ch.require_semisimple()?;
            Ok((ch.u.clone(), vec![C::new(1.0, 0.0); pt.m]))
        }
        Chart::FlatT => {
            if pt.m != 3 {
                return Err(FrobError::NoFlatChart(pt.m));
            }
            let t = a3_flat_coordinates(&pt.a);
            Ok(a3_euler_unity_t(&t))
        }
    }
}

/// `E = t1 d1 + (3/4) t2 d2 + (1/2) t3 d3`, `e = d1` in the flat `t` chart of A_3.
pub fn a3_euler_unity_t<S: Scalar>(t: &[S]) -> (Vec<S>, Vec<S>) {
    (
        vec![t[0].clone(), t[1].clone() * S::from_rational(&q(3, 4)), t[2].clone() * S::from_rational(&q(1, 2))],
        vec![S::one(), S::zero(), S::zero()],
    )
}

/// Canonical-chart intersection form `g_ii / u^i`.
pub fn intersection_form(chart: &CanonicalChart, metric: &MetricTensor<C>) -> Result<MetricTensor<C>, FrobError> {
    let scale = 1.0 + chart.u.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let d = metric.diag();
    let mut out = Vec::with_capacity(d.len());
    for (i, (g, u)) in d.iter().zip(&chart.u).enumerate() {
        if u.norm() <= 1e-12 * scale {
            return Err(FrobError::OnDiscriminant { index: i });
        }
        out.push(g / u);
    }
    Ok(MetricTensor::diagonal(out, Chart::Canonical))
}

/// Contravariant intersection form in any frame: `E^k c_k^(ij)`, indices
/// raised with the inverse pairing. `euler` is given in the same frame.
pub fn intersection_form_upper<S: Scalar>(
    pt: &UnfoldingPoint<S>,
    frame: &[Polynomial<S>],
    euler: &[S],
) -> Result<Vec<Vec<S>>, FrobError> {
    let eta = pairing_matrix(pt, frame)?;
    let inv = numerics::inverse(&eta).ok_or(FrobError::DegenerateFrame)?;
    let e_poly = from_components(frame, euler);
    // (E o) as a matrix M_ab = <E o f_a, f_b>, then raise both indices
    let dp = pt.dp();
    let n = frame.len();
    let ef: Vec<Polynomial<S>> = frame.iter().map(|f| quotient_multiply(&e_poly, f, &dp)).collect();
    let mut mab = vec![vec![S::zero(); n]; n];
    for a in 0..n {
        for b in 0..n {
            mab[a][b] = finite_residue_sum(&(&ef[a] * &frame[b]), &dp)?;
        }
    }
    let mut out = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = S::zero();
            for a in 0..n {
                for b in 0..n {
                    s = s + inv[i][a].clone() * mab[a][b].clone() * inv[b][j].clone();
                }
            }
            out[i][j] = s;
        }
    }
    Ok(out)
}

/// Roots in `u` of `det[g2^(ij) - u g1^(ij)] = 0`.
pub fn pencil_roots<S: Scalar>(g2_upper: &[Vec<S>], g1_upper: &[Vec<S>]) -> Result<Vec<C>, FrobError> {
    let n = g2_upper.len();
    let m: Vec<Vec<Polynomial<S>>> = (0..n)
        .map(|i| (0..n).map(|j| Polynomial::new(vec![g2_upper[i][j].clone(), -g1_upper[i][j].clone()])).collect())
        .collect();
    let det = det_ring(&m, Polynomial::zero(), Polynomial::one(), |a, b| a * b);
    let cl = roots_clustered(&det, DEFAULT_CLUSTER_TOL)?;
    Ok(cl.iter().flat_map(|c| std::iter::repeat_n(c.center, c.multiplicity)).collect())
}

/// `t = (a_3 - a_1^2/8, a_2, a_1)`.
pub fn a3_flat_coordinates<S: Scalar>(a: &[S]) -> Vec<S> {
    let eighth = S::from_rational(&q(1, 8));
    vec![a[2].clone() - a[0].clone() * a[0].clone() * eighth, a[1].clone(), a[0].clone()]
}

/// `a = (t_3, t_2, t_1 + t_3^2/8)`.
pub fn a3_from_flat<S: Scalar>(t: &[S]) -> Vec<S> {
    let eighth = S::from_rational(&q(1, 8));
    vec![t[2].clone(), t[1].clone(), t[0].clone() + t[2].clone() * t[2].clone() * eighth]
}

/// `dp/dt_i` for A_3: `1, z, z^2 + t_3/4`.
pub fn a3_t_frame<S: Scalar>(t: &[S]) -> Vec<Polynomial<S>> {
    vec![
        Polynomial::constant(S::one()),
        Polynomial::monomial(S::one(), 1),
        Polynomial::new(vec![t[2].clone() * S::from_rational(&q(1, 4)), S::zero(), S::one()]),
    ]
}

/// Flat frame for the cases where flat coordinates are available.
pub fn flat_frame<S: Scalar>(pt: &UnfoldingPoint<S>) -> Result<Vec<Polynomial<S>>, FrobError> {
    match pt.m {
        1 | 2 => Ok(a_frame(pt.m)),
        3 => Ok(a3_t_frame(&a3_flat_coordinates(&pt.a))),
        m => Err(FrobError::NoFlatChart(m)),
    }
}

/// `(g_ii, (1/(m+1)) da_1/du^i)` for each `i`, the right side by finite
/// differences of the chart map `a -> u`.
pub fn egoroff_potential(pt: &UnfoldingPoint<C>) -> Result<Vec<(C, C)>, FrobError> {
    let chart = canonical_chart(pt)?;
    let g = canonical_metric(&chart, pt)?.diag();
    let m = pt.m;
    let reference = chart.alphas.clone();
    let u_of_a = |a: &[C]| -> Vec<C> {
        canonical_chart_near(&UnfoldingPoint::new(a.to_vec()), &reference).map(|c| c.u).unwrap_or_else(|_| vec![C::new(f64::NAN, 0.0); m])
    };
    // J_ij = du^i/da_j
    let cols: Vec<Vec<C>> = (0..m).map(|j| numerics::diff(&u_of_a, &pt.a, j, FD_STEP)).collect();
    let jac: Vec<Vec<C>> = (0..m).map(|i| (0..m).map(|j| cols[j][i]).collect()).collect();
    let inv = numerics::inverse(&jac).ok_or(FrobError::DegenerateFrame)?;
    let w = C::new(1.0 / (m as f64 + 1.0), 0.0);
    Ok((0..m).map(|i| (g[i], inv[0][i] * w)).collect())
}

/// Random real point with well-separated critical values.
pub fn sample_semisimple(m: usize, rng: &mut ChaCha8Rng) -> UnfoldingPoint<C> {
    loop {
        let a: Vec<C> = (0..m).map(|_| C::new(numerics::uniform(rng, -1.0, 1.0), 0.0)).collect();
        let pt = UnfoldingPoint::new(a);
        if let Ok(ch) = canonical_chart(&pt) {
            let sep = ch.alphas.iter().enumerate().all(|(i, x)| ch.alphas[i + 1..].iter().all(|y| (x - y).norm() > 1e-2));
            if ch.is_semisimple() && ch.min_gap() > 1e-3 && sep {
                return pt;
            }
        }
    }
}

/// Random rational point for exact checks.
pub fn sample_rational(m: usize, rng: &mut ChaCha8Rng) -> UnfoldingPoint<Q> {
    use rand::Rng;
    UnfoldingPoint::new((0..m).map(|_| q(rng.gen_range(-20..=20), rng.gen_range(1..=7))).collect())
}

/// Constant used by several checks: `<1,1>` on A_1.
pub fn a1_unit_pairing() -> Q {
    let pt = UnfoldingPoint::new(vec![qi(0)]);
    tangent_pairing(&pt, &Polynomial::one(), &Polynomial::one()).expect("A_1 pairing")
}
