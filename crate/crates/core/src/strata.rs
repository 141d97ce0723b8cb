//! Natural submanifolds of the A_m manifold: labels, their polynomial
//! realization, tangent frames, induced metric and product, and the
//! classification obstruction in canonical coordinates.
//!
//! A stratum `(k_1, ..., k_n | z zeros)` sets `u = (tau^1 x k_1, ..., tau^n x k_n, 0 x z)`.
//! Its polynomial realization has critical points `alpha_i` of multiplicity
//! `k_i` with `p(alpha_i) = tau^i`, plus zero groups: critical points where
//! `p` vanishes. Zero slots are simple critical points when `2z <= m+1`;
//! otherwise there is no room in degree `m+1` for that many double roots of
//! `p` and the slots are packed into `m+1-z` groups of higher multiplicity.

use crate::frobenius_an::{a_frame, structure_constants, MetricTensor, Chart, UnfoldingPoint};
use crate::numerics::{self, inverse};
use crate::polyalg::{
    finite_residue_sum, q, qi, quotient_multiply, residue_at_point, PolyError, Polynomial, Scalar, C, Q,
};
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrataError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid stratum label: {0}")]
    BadLabel(String),
    #[error("invalid stratum point: {0}")]
    InvalidPoint(String),
    #[error("degenerate stratum: interpolation system is singular (colliding critical points)")]
    DegenerateStratum,
    #[error("induced metric is degenerate (entry {index} vanishes)")]
    DegenerateInducedMetric { index: usize },
    #[error("Newton solve for the stratum point did not converge (residual {0:e})")]
    NoConvergence(f64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct StratumSpec {
    /// Multiplicities `k_i`, non-increasing.
    pub partition: Vec<usize>,
    /// Number of zeroed canonical coordinates.
    pub zeroed: usize,
    /// Ambient dimension, `sum k_i + zeroed`.
    pub m: usize,
}

impl StratumSpec {
    pub fn new(mut partition: Vec<usize>, zeroed: usize) -> Result<Self, StrataError> {
        if partition.is_empty() || partition.contains(&0) {
            return Err(StrataError::BadLabel(format!("partition {partition:?} must be non-empty and positive")));
        }
        partition.sort_unstable_by(|a, b| b.cmp(a));
        let m = partition.iter().sum::<usize>() + zeroed;
        Ok(StratumSpec { partition, zeroed, m })
    }

    pub fn ambient(m: usize) -> Self {
        StratumSpec { partition: vec![1; m], zeroed: 0, m }
    }

    pub fn dim(&self) -> usize {
        self.partition.len()
    }

    pub fn is_ambient(&self) -> bool {
        self.zeroed == 0 && self.partition.iter().all(|&k| k == 1)
    }

    /// Only coincidences, no zeroed coordinates.
    pub fn is_pure_caustic(&self) -> bool {
        self.zeroed == 0
    }

    /// `{m}`: `p = z^(m+1) + tau`. For `m >= 2` its induced metric vanishes
    /// identically, since the single residue of `1/p'` must sum to zero.
    pub fn is_top_caustic(&self) -> bool {
        self.zeroed == 0 && self.partition.len() == 1
    }

    /// Only zeroed coordinates, no coincidences.
    pub fn is_pure_discriminant(&self) -> bool {
        self.partition.iter().all(|&k| k == 1)
    }

    /// Stable serialization, e.g. `4+2|0,0`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.partition.iter().map(|k| k.to_string()).collect();
        let zeros = vec!["0"; self.zeroed].join(",");
        format!("{}|{}", parts.join("+"), zeros)
    }

    /// Brace notation `{2,1}`, `{1,1,0}`.
    pub fn braces(&self) -> String {
        let mut v: Vec<String> = self.partition.iter().map(|k| k.to_string()).collect();
        v.extend(std::iter::repeat_n("0".to_string(), self.zeroed));
        format!("{{{}}}", v.join(","))
    }

    pub fn parse(s: &str) -> Result<Self, StrataError> {
        let bad = || StrataError::BadLabel(s.to_string());
        let (parts, zeros) = s.split_once('|').unwrap_or((s, ""));
        let partition: Vec<usize> =
            parts.split('+').map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let zeroed = if zeros.trim().is_empty() {
            0
        } else {
            let z: Vec<&str> = zeros.split(',').map(|z| z.trim()).collect();
            if z.iter().any(|x| *x != "0") {
                return Err(bad());
            }
            z.len()
        };
        Self::new(partition, zeroed)
    }

    /// Multiplicities of the zero-valued critical groups in the realization.
    pub fn zero_groups(&self) -> Vec<usize> {
        let z = self.zeroed;
        if z == 0 {
            return vec![];
        }
        let groups = z.min(self.m + 1 - z);
        let (base, extra) = (z / groups, z % groups);
        (0..groups).map(|g| base + usize::from(g < extra)).collect()
    }

    /// Canonical-coordinate slot of each `u^i`: `Some(alpha)` for `tau^alpha`, `None` for zero.
    pub fn slots(&self) -> Vec<Option<usize>> {
        let mut v = vec![];
        for (a, &k) in self.partition.iter().enumerate() {
            v.extend(std::iter::repeat_n(Some(a), k));
        }
        v.extend(std::iter::repeat_n(None, self.zeroed));
        v
    }

    /// Monge form of the stratum in canonical coordinates.
    pub fn monge_graph(&self) -> MongeGraph {
        let slots = self.slots();
        let mut free = vec![usize::MAX; self.dim()];
        let mut graphs: Vec<(usize, GraphFn)> = vec![];
        for (i, s) in slots.iter().enumerate() {
            match s {
                Some(a) if free[*a] == usize::MAX => free[*a] = i,
                Some(a) => graphs.push((i, GraphFn::Coordinate(*a))),
                None => graphs.push((i, GraphFn::Zero)),
            }
        }
        MongeGraph { m: self.m, free, graphs }
    }
}

impl fmt::Display for StratumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

fn partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for first in (1..=n.min(max)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All strata of A_m: a partition of `n` plus `m-n` zeros for `n = 1..m`,
/// so `sum_{n=1}^m mu(n)` labels. The ambient manifold `(1,...,1)` is
/// included; the origin (all coordinates zeroed, dimension 0) is not, so for
/// `m = 1` the only stratum is `{1}`.
pub fn enumerate_strata(m: usize) -> Result<Vec<StratumSpec>, StrataError> {
    if m == 0 {
        return Err(StrataError::BadLabel("m must be at least 1".into()));
    }
    let mut out = vec![];
    for n in (1..=m).rev() {
        for p in partitions(n, n) {
            out.push(StratumSpec::new(p, m - n)?);
        }
    }
    out.sort_by(|a, b| {
        b.dim().cmp(&a.dim()).then(a.zeroed.cmp(&b.zeroed)).then(b.partition.cmp(&a.partition))
    });
    Ok(out)
}

/// Codimension-one nestings `(parent, child)`: the child sets one `tau` of the
/// parent to zero or identifies two of them.
pub fn nesting_arrows(strata: &[StratumSpec]) -> Vec<(StratumSpec, StratumSpec)> {
    let mut out = vec![];
    for s in strata {
        let mut children = vec![];
        let n = s.partition.len();
        for i in 0..n {
            if n > 1 {
                let mut p = s.partition.clone();
                let k = p.remove(i);
                children.push(StratumSpec::new(p, s.zeroed + k).unwrap());
            }
            for j in i + 1..n {
                let mut p = s.partition.clone();
                let kj = p.remove(j);
                p[i] += kj;
                children.push(StratumSpec::new(p, s.zeroed).unwrap());
            }
        }
        children.sort();
        children.dedup();
        for c in children {
            if strata.contains(&c) {
                out.push((s.clone(), c));
            }
        }
    }
    out
}

/// A critical point of `p` in the realization of a stratum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalGroup<S> {
    pub point: S,
    pub mult: usize,
    /// `Some(i)`: value `tau^i`; `None`: value zero.
    pub tau_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StratumPoint<S> {
    pub spec: StratumSpec,
    pub groups: Vec<CriticalGroup<S>>,
    pub p: Polynomial<S>,
    pub taus: Vec<S>,
}

fn group_layout(spec: &StratumSpec) -> Vec<(usize, Option<usize>)> {
    let mut v: Vec<(usize, Option<usize>)> = spec.partition.iter().enumerate().map(|(i, &k)| (k, Some(i))).collect();
    v.extend(spec.zero_groups().into_iter().map(|j| (j, None)));
    v
}

fn is_small<S: Scalar>(x: &S, scale: f64) -> bool {
    if S::EXACT {
        x.is_zero()
    } else {
        x.magnitude() <= 1e-9 * (1.0 + scale)
    }
}

/// `p' = (m+1) prod (z - x_g)^(mult_g)`
fn derivative_poly<S: Scalar>(m: usize, points: &[S], mults: &[usize]) -> Polynomial<S> {
    let roots: Vec<(S, usize)> = points.iter().cloned().zip(mults.iter().cloned()).collect();
    Polynomial::from_roots(&roots).scale(&S::from_i64(m as i64 + 1))
}

impl<S: Scalar> StratumPoint<S> {
    /// Realize a stratum from all its critical points (tau groups first, then
    /// zero groups in `spec.zero_groups()` order) and the integration constant.
    /// Checks `sum mult x = 0`, distinctness and `p = 0` on zero groups.
    pub fn from_critical_points(spec: &StratumSpec, points: &[S], constant: S) -> Result<Self, StrataError> {
        let layout = group_layout(spec);
        if points.len() != layout.len() {
            return Err(StrataError::InvalidPoint(format!("expected {} critical points, got {}", layout.len(), points.len())));
        }
        let scale = points.iter().map(|x| x.magnitude()).fold(0.0, f64::max);
        let centroid = points.iter().zip(&layout).fold(S::zero(), |acc, (x, (k, _))| acc + x.clone() * S::from_i64(*k as i64));
        if !is_small(&centroid, scale) {
            return Err(StrataError::InvalidPoint("critical points violate sum k_i alpha_i = 0".into()));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if is_small(&(points[i].clone() - points[j].clone()), scale) {
                    return Err(StrataError::InvalidPoint(format!("critical points {i} and {j} collide")));
                }
            }
        }
        let mults: Vec<usize> = layout.iter().map(|l| l.0).collect();
        let dp = derivative_poly(spec.m, points, &mults);
        let p = &dp.integral() + &Polynomial::constant(constant);
        let pscale = p.max_abs_coeff() * (1.0 + scale).powi(spec.m as i32 + 1);
        let mut taus = vec![S::zero(); spec.dim()];
        for (x, (_, slot)) in points.iter().zip(&layout) {
            let v = p.eval(x);
            match slot {
                Some(i) => taus[*i] = v,
                None => {
                    let ok = if S::EXACT { v.is_zero() } else { v.magnitude() <= 1e-9 * (1.0 + pscale) };
                    if !ok {
                        return Err(StrataError::InvalidPoint(format!("zero group has p = {v:?}")));
                    }
                }
            }
        }
        let groups = points
            .iter()
            .zip(&layout)
            .map(|(x, (k, s))| CriticalGroup { point: x.clone(), mult: *k, tau_index: *s })
            .collect();
        Ok(StratumPoint { spec: spec.clone(), groups, p, taus })
    }

    /// Ambient point; the `z^m` coefficient is zero up to rounding and dropped.
    pub fn unfolding(&self) -> UnfoldingPoint<S> {
        let m = self.spec.m;
        UnfoldingPoint::new((1..=m).map(|i| self.p.coeff(m - i)).collect())
    }

    pub fn dp(&self) -> Polynomial<S> {
        self.p.derivative()
    }

    pub fn alphas(&self) -> Vec<S> {
        self.groups.iter().filter(|g| g.tau_index.is_some()).map(|g| g.point.clone()).collect()
    }

    /// `prod_{r != i} (z - x_r)^(mult_r)` over every other critical group.
    pub fn h_poly(&self, i: usize) -> Polynomial<S> {
        let roots: Vec<(S, usize)> = self
            .groups
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != i)
            .map(|(_, g)| (g.point.clone(), g.mult))
            .collect();
        Polynomial::from_roots(&roots)
    }
}

/// The tangent frame `dp/dtau^j` of a stratum.
#[derive(Clone, Debug)]
pub struct TangentFrame<S> {
    pub frame_polys: Vec<Polynomial<S>>,
}

/// Solve the interpolation conditions: at a tau group `i`, value `delta_ij` and
/// vanishing derivatives of orders `1..k_i-1`; at a zero group of multiplicity
/// `j`, vanishing value and derivatives of orders `< j`.
pub fn tangent_frame<S: Scalar>(pt: &StratumPoint<S>) -> Result<TangentFrame<S>, StrataError> {
    let m = pt.spec.m;
    // rows: (group, derivative order); columns: coefficient of z^l
    let mut rows: Vec<Vec<S>> = vec![];
    let mut row_meta: Vec<(usize, usize)> = vec![];
    for (g, grp) in pt.groups.iter().enumerate() {
        for r in 0..grp.mult {
            let row = (0..m)
                .map(|l| {
                    if l < r {
                        S::zero()
                    } else {
                        let falling = ((l - r + 1)..=l).fold(1i64, |a, b| a * b as i64);
                        S::from_i64(falling) * pow(&grp.point, l - r)
                    }
                })
                .collect();
            rows.push(row);
            row_meta.push((g, r));
        }
    }
    let inv = inverse(&rows).ok_or(StrataError::DegenerateStratum)?;
    let mut frame = vec![];
    for j in 0..pt.spec.dim() {
        let rhs: Vec<S> = row_meta
            .iter()
            .map(|&(g, r)| if r == 0 && pt.groups[g].tau_index == Some(j) { S::one() } else { S::zero() })
            .collect();
        let coeffs: Vec<S> = inv
            .iter()
            .map(|row| row.iter().zip(&rhs).fold(S::zero(), |a, (x, y)| a + x.clone() * y.clone()))
            .collect();
        frame.push(Polynomial::new(coeffs));
    }
    Ok(TangentFrame { frame_polys: frame })
}

fn pow<S: Scalar>(x: &S, k: usize) -> S {
    (0..k).fold(S::one(), |a, _| a * x.clone())
}

fn group_of_tau<S: Scalar>(pt: &StratumPoint<S>, j: usize) -> usize {
    pt.groups.iter().position(|g| g.tau_index == Some(j)).expect("every tau has a group")
}

/// Residuals of the product form `dp/dtau^j = p^(j)(z) h^(j)(z)` with
/// `deg p^(j) < k_j`, and of the Taylor form `1 + O((z - alpha_j)^(k_j))`.
/// Returns `(product_form_residual, taylor_form_residual)` (zero when exact).
pub fn frame_form_residuals<S: Scalar>(pt: &StratumPoint<S>, frame: &TangentFrame<S>) -> (f64, f64) {
    let mut prod_res: f64 = 0.0;
    let mut taylor_res: f64 = 0.0;
    for (j, f) in frame.frame_polys.iter().enumerate() {
        let g = group_of_tau(pt, j);
        let k = pt.groups[g].mult;
        let (quo, rem) = f.div_rem(&pt.h_poly(g));
        prod_res = prod_res.max(rem.max_abs_coeff());
        if quo.degree().unwrap_or(0) >= k {
            prod_res = prod_res.max(quo.coeff(quo.degree().unwrap()).magnitude());
        }
        let t = f.shift(&pt.groups[g].point);
        taylor_res = taylor_res.max((t.coeff(0) - S::one()).magnitude());
        for r in 1..k {
            taylor_res = taylor_res.max(t.coeff(r).magnitude());
        }
    }
    (prod_res, taylor_res)
}

/// Taylor coefficients (as derivatives, `d^r/dz^r`) at `x` up to order `n-1`.
fn derivatives_at<S: Scalar>(p: &Polynomial<S>, x: &S, n: usize) -> Vec<S> {
    let t = p.shift(x);
    let mut fact = S::one();
    (0..n)
        .map(|r| {
            if r > 0 {
                fact = fact.clone() * S::from_i64(r as i64);
            }
            t.coeff(r) * fact.clone()
        })
        .collect()
}

/// Frame-derivative check: for each tau group `i`, the derivatives at `alpha_i` of
/// `p^(i) = (dp/dtau^i)/h^(i)` against those of the series inverse of `h^(i)`,
/// orders `0..k_i-1`. Returns pairs `(p_r, h^(-1)_r)`.
pub fn frame_derivative_pairs<S: Scalar>(pt: &StratumPoint<S>, frame: &TangentFrame<S>) -> Vec<Vec<(S, S)>> {
    let mut out = vec![];
    for (j, f) in frame.frame_polys.iter().enumerate() {
        let g = group_of_tau(pt, j);
        let k = pt.groups[g].mult;
        let x = &pt.groups[g].point;
        let h = pt.h_poly(g);
        let pj = f.div_rem(&h).0;
        let p_r = derivatives_at(&pj, x, k);
        // series inverse of h about x: b = 1/a as power series in w
        let a = h.shift(x);
        let mut b: Vec<S> = vec![S::one() / a.coeff(0)];
        for r in 1..k {
            let mut s = S::zero();
            for t in 1..=r {
                s = s + a.coeff(t) * b[r - t].clone();
            }
            b.push(-(s / a.coeff(0)));
        }
        let mut fact = S::one();
        let h_r: Vec<S> = b
            .into_iter()
            .enumerate()
            .map(|(r, c)| {
                if r > 0 {
                    fact = fact.clone() * S::from_i64(r as i64);
                }
                c * fact.clone()
            })
            .collect();
        out.push(p_r.into_iter().zip(h_r).collect());
    }
    out
}

/// Diagonal induced metric `g_ii = res_{alpha_i} 1/p'` (pole of order `k_i`).
pub fn induced_metric<S: Scalar>(pt: &StratumPoint<S>) -> Result<MetricTensor<S>, StrataError> {
    let dp = pt.dp();
    let one = Polynomial::one();
    let mut d = vec![S::zero(); pt.spec.dim()];
    for g in &pt.groups {
        if let Some(i) = g.tau_index {
            let r = residue_at_point(&one, &dp, &g.point, g.mult)?;
            if is_small(&r, 0.0) && S::EXACT {
                return Err(StrataError::DegenerateInducedMetric { index: i });
            }
            d[i] = r;
        }
    }
    Ok(MetricTensor::diagonal(d, Chart::Canonical))
}

/// Residues of `1/p'` at the zero groups; with the tau residues they sum to zero.
pub fn zero_group_residues<S: Scalar>(pt: &StratumPoint<S>) -> Result<Vec<S>, StrataError> {
    let dp = pt.dp();
    let one = Polynomial::one();
    pt.groups
        .iter()
        .filter(|g| g.tau_index.is_none())
        .map(|g| Ok(residue_at_point(&one, &dp, &g.point, g.mult)?))
        .collect()
}

/// Gram matrix of the frame under the ambient pairing, for diagonality checks.
pub fn frame_gram<S: Scalar>(pt: &StratumPoint<S>, frame: &TangentFrame<S>) -> Result<Vec<Vec<S>>, StrataError> {
    let dp = pt.dp();
    frame
        .frame_polys
        .iter()
        .map(|f| frame.frame_polys.iter().map(|g| Ok(finite_residue_sum(&(f * g), &dp)?)).collect())
        .collect()
}

/// The product `X * Y = pr(X o Y)` on the span of `frame`, with `pr` the
/// orthogonal projection under the ambient pairing.
#[derive(Clone, Debug)]
pub struct InducedProduct<S> {
    /// `star[i][j][k]`: component along `frame[k]` of `frame[i] * frame[j]`.
    pub star: Vec<Vec<Vec<S>>>,
    /// Induced metric on the frame.
    pub gram: Vec<Vec<S>>,
    /// Largest coefficient of `X o Y - pr(X o Y)` over frame pairs.
    pub normal_residual: f64,
}

fn project<S: Scalar>(
    dp: &Polynomial<S>,
    frame: &[Polynomial<S>],
    gram_inv: &[Vec<S>],
    v: &Polynomial<S>,
) -> Result<(Vec<S>, Polynomial<S>), StrataError> {
    let n = frame.len();
    let pairings: Vec<S> =
        frame.iter().map(|f| finite_residue_sum(&(v * f), dp)).collect::<Result<_, _>>()?;
    let comps: Vec<S> = (0..n)
        .map(|b| (0..n).fold(S::zero(), |acc, a| acc + gram_inv[b][a].clone() * pairings[a].clone()))
        .collect();
    let proj = frame.iter().zip(&comps).fold(Polynomial::zero(), |acc, (f, c)| &acc + &f.scale(c));
    Ok((comps, proj))
}

pub fn induced_product<S: Scalar>(
    ambient: &UnfoldingPoint<S>,
    frame: &[Polynomial<S>],
) -> Result<InducedProduct<S>, StrataError> {
    let dp = ambient.dp();
    let n = frame.len();
    let gram: Vec<Vec<S>> = frame
        .iter()
        .map(|f| frame.iter().map(|g| finite_residue_sum(&(f * g), &dp)).collect::<Result<Vec<S>, _>>())
        .collect::<Result<_, _>>()?;
    let gram_inv = inverse(&gram).ok_or(StrataError::DegenerateInducedMetric { index: 0 })?;
    let mut star = vec![vec![vec![S::zero(); n]; n]; n];
    let mut resid: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let xy = quotient_multiply(&frame[i], &frame[j], &dp);
            let (comps, proj) = project(&dp, frame, &gram_inv, &xy)?;
            resid = resid.max((&xy - &proj).max_abs_coeff());
            star[i][j] = comps;
        }
    }
    Ok(InducedProduct { star, gram, normal_residual: resid })
}

impl<S: Scalar> InducedProduct<S> {
    /// Largest `|(X*Y)*Z - X*(Y*Z)|` component over frame triples.
    pub fn associativity_residual(&self) -> f64 {
        let n = self.star.len();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut a = S::zero();
                        let mut b = S::zero();
                        for s in 0..n {
                            a = a + self.star[i][j][s].clone() * self.star[s][k][l].clone();
                            b = b + self.star[j][k][s].clone() * self.star[i][s][l].clone();
                        }
                        r = r.max((a - b).magnitude());
                    }
                }
            }
        }
        r
    }

    /// Largest `|<X*Y, Z> - <X, Y*Z>|` over frame triples.
    pub fn compatibility_residual(&self) -> f64 {
        let n = self.star.len();
        let pair = |v: &[S], k: usize| (0..n).fold(S::zero(), |acc, a| acc + v[a].clone() * self.gram[a][k].clone());
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lhs = pair(&self.star[i][j], k);
                    let rhs = pair(&self.star[j][k], i);
                    r = r.max((lhs - rhs).magnitude());
                }
            }
        }
        r
    }
}

/// Split the ambient unity `e = 1` into tangential and normal parts.
pub fn identity_decomposition<S: Scalar>(
    ambient: &UnfoldingPoint<S>,
    frame: &[Polynomial<S>],
) -> Result<(Polynomial<S>, Polynomial<S>), StrataError> {
    let dp = ambient.dp();
    let gram: Vec<Vec<S>> = frame
        .iter()
        .map(|f| frame.iter().map(|g| finite_residue_sum(&(f * g), &dp)).collect::<Result<Vec<S>, _>>())
        .collect::<Result<_, _>>()?;
    let gram_inv = inverse(&gram).ok_or(StrataError::DegenerateInducedMetric { index: 0 })?;
    let e = Polynomial::one();
    let (_, top) = project(&dp, frame, &gram_inv, &e)?;
    let perp = &e - &top;
    Ok((top, perp))
}

/// Largest coefficient of `X o Y - pr(X o Y)` for `X` in the frame and `Y` in
/// the ambient `a`-frame. Zero exactly when `T N` is an ideal.
pub fn ideal_residual<S: Scalar>(ambient: &UnfoldingPoint<S>, frame: &[Polynomial<S>]) -> Result<f64, StrataError> {
    let dp = ambient.dp();
    let gram: Vec<Vec<S>> = frame
        .iter()
        .map(|f| frame.iter().map(|g| finite_residue_sum(&(f * g), &dp)).collect::<Result<Vec<S>, _>>())
        .collect::<Result<_, _>>()?;
    let gram_inv = inverse(&gram).ok_or(StrataError::DegenerateInducedMetric { index: 0 })?;
    let mut r: f64 = 0.0;
    for x in frame {
        for y in a_frame::<S>(ambient.m) {
            let xy = quotient_multiply(x, &y, &dp);
            let (_, proj) = project(&dp, frame, &gram_inv, &xy)?;
            r = r.max((&xy - &proj).max_abs_coeff());
        }
    }
    Ok(r)
}

/// Structure constants of the ambient product restricted to a frame, for
/// callers that want `c(X, Y, Z)` directly.
pub fn frame_structure_constants<S: Scalar>(
    ambient: &UnfoldingPoint<S>,
    frame: &[Polynomial<S>],
) -> Result<Vec<Vec<Vec<S>>>, StrataError> {
    structure_constants(ambient, frame).map_err(|e| StrataError::InvalidPoint(e.to_string()))
}

// ---------------------------------------------------------------------------
// numerical realization

/// Newton solve for the realization with prescribed `tau`, starting from `guess`.
pub fn solve_stratum_point(spec: &StratumSpec, taus: &[C], guess: &StratumPoint<C>) -> Result<StratumPoint<C>, StrataError> {
    let layout = group_layout(spec);
    let mults: Vec<usize> = layout.iter().map(|l| l.0).collect();
    let targets: Vec<C> = layout.iter().map(|(_, s)| s.map_or(C::new(0.0, 0.0), |i| taus[i])).collect();
    let g = layout.len();
    let mut x: Vec<C> = guess.groups.iter().map(|gr| gr.point).collect();
    let mut c = guess.p.coeff(0);
    let m = spec.m;
    let residual = |x: &[C], c: C| -> (Vec<C>, Polynomial<C>) {
        let dp = derivative_poly(m, x, &mults);
        let p = &dp.integral() + &Polynomial::constant(c);
        let mut f = vec![x.iter().zip(&mults).map(|(a, k)| a * *k as f64).sum::<C>()];
        for h in 0..g {
            f.push(p.eval(&x[h]) - targets[h]);
        }
        (f, dp)
    };
    let scale = 1.0 + taus.iter().map(|t| t.norm()).fold(0.0, f64::max);
    for _ in 0..100 {
        let (f, dp) = residual(&x, c);
        let norm = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if norm < 1e-14 * scale {
            break;
        }
        // jacobian: rows = equations, cols = (x_0..x_{g-1}, c)
        let mut jac = vec![vec![C::new(0.0, 0.0); g + 1]; g + 1];
        for h in 0..g {
            jac[0][h] = C::new(mults[h] as f64, 0.0);
        }
        for h in 0..g {
            // d p'/d x_h = -mult_h p' / (z - x_h)
            let lin = Polynomial::new(vec![-x[h], C::new(1.0, 0.0)]);
            let dph = dp.div_rem(&lin).0.scale(&C::new(-(mults[h] as f64), 0.0)).integral();
            for e in 0..g {
                jac[e + 1][h] = dph.eval(&x[e]);
            }
        }
        for e in 0..g {
            jac[e + 1][g] = C::new(1.0, 0.0);
        }
        let step = numerics::solve(&jac, &f).ok_or(StrataError::DegenerateStratum)?;
        for h in 0..g {
            x[h] -= step[h];
        }
        c -= step[g];
    }
    let (f, _) = residual(&x, c);
    let norm = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(norm < 1e-10 * scale) {
        return Err(StrataError::NoConvergence(norm));
    }
    StratumPoint::from_critical_points(spec, &x, c)
}

/// Random complex realization with well-separated critical points.
pub fn sample_stratum_point(spec: &StratumSpec, rng: &mut ChaCha8Rng) -> StratumPoint<C> {
    let layout = group_layout(spec);
    let zeros: Vec<usize> = spec.zero_groups();
    loop {
        let alphas: Vec<C> = (0..spec.dim()).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let c = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let attempt = if zeros.is_empty() {
            // shift to the centroid frame
            let k: Vec<f64> = spec.partition.iter().map(|&k| k as f64).collect();
            let centre: C = alphas.iter().zip(&k).map(|(a, k)| a * k).sum::<C>() / spec.m as f64;
            let pts: Vec<C> = alphas.iter().map(|a| a - centre).collect();
            StratumPoint::from_critical_points(spec, &pts, c).ok()
        } else {
            // realize zero groups by Newton: free alphas, unknown zero points and constant
            let mut pts = alphas.clone();
            pts.extend((0..zeros.len()).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
            solve_zero_groups(spec, &layout, &pts, c)
        };
        if let Some(pt) = attempt {
            let sep = pt.groups.iter().enumerate().all(|(i, a)| {
                pt.groups[i + 1..].iter().all(|b| (a.point - b.point).norm() > 0.05)
            });
            let bounded = pt.groups.iter().all(|g| g.point.norm() < 3.0);
            // small or nearly equal critical values put the chart close to a deeper stratum
            let sized = pt.taus.iter().all(|t| t.norm() > 0.05);
            let distinct = pt.taus.iter().enumerate().all(|(i, a)| pt.taus[i + 1..].iter().all(|b| (a - b).norm() > 0.05));
            if sep && bounded && sized && distinct {
                return pt;
            }
        }
    }
}

/// Given tau-group points, find zero-group points, the constant, and a common
/// translation so that every constraint holds.
fn solve_zero_groups(spec: &StratumSpec, layout: &[(usize, Option<usize>)], start: &[C], c0: C) -> Option<StratumPoint<C>> {
    let mults: Vec<usize> = layout.iter().map(|l| l.0).collect();
    let n = spec.dim();
    let g = layout.len();
    let m = spec.m;
    // unknowns: zero points (g - n) and constant; alphas fixed up to translation afterwards
    let mut x = start.to_vec();
    let mut c = c0;
    for _ in 0..100 {
        let dp = derivative_poly(m, &x, &mults);
        let p = &dp.integral() + &Polynomial::constant(c);
        let f: Vec<C> = (n..g).map(|h| p.eval(&x[h])).collect();
        let norm = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if norm < 1e-15 {
            break;
        }
        let nz = g - n;
        // equations: p(x_h) = 0 for zero groups; unknowns: x_h (zero groups) then c.
        // one more unknown than equations: hold c fixed unless there is a single zero group
        let mut jac = vec![vec![C::new(0.0, 0.0); nz]; nz];
        for (col, h) in (n..g).enumerate() {
            let lin = Polynomial::new(vec![-x[h], C::new(1.0, 0.0)]);
            let dph = dp.div_rem(&lin).0.scale(&C::new(-(mults[h] as f64), 0.0)).integral();
            for (row, e) in (n..g).enumerate() {
                jac[row][col] = dph.eval(&x[e]);
            }
        }
        match numerics::solve(&jac, &f) {
            Some(step) if step.iter().all(|s| s.norm().is_finite()) => {
                for (col, h) in (n..g).enumerate() {
                    x[h] -= step[col];
                }
            }
            _ => {
                // singular in the zero points alone; move the constant instead
                c -= f[0];
            }
        }
        if x.iter().any(|v| v.norm() > 10.0) {
            return None;
        }
    }
    // translate so that sum mult x = 0; critical values are unchanged
    let total: f64 = mults.iter().sum::<usize>() as f64;
    let centre: C = x.iter().zip(&mults).map(|(a, k)| a * *k as f64).sum::<C>() / total;
    let shifted: Vec<C> = x.iter().map(|a| a - centre).collect();
    // the constant must keep p(x_h) = 0 after translation: recompute it from a zero group
    let dp = derivative_poly(m, &shifted, &mults);
    let anti = dp.integral();
    let c_new = -anti.eval(&shifted[n]);
    StratumPoint::from_critical_points(spec, &shifted, c_new).ok()
}

/// Random exact realization for strata with at most one zero group, where
/// every constraint is linear and the data stays rational.
pub fn sample_stratum_point_exact(spec: &StratumSpec, rng: &mut ChaCha8Rng) -> Option<StratumPoint<Q>> {
    let zeros = spec.zero_groups();
    if zeros.len() > 1 {
        return None;
    }
    for _ in 0..1000 {
        let alphas: Vec<Q> = (0..spec.dim()).map(|_| q(rng.gen_range(-12..=12), rng.gen_range(1..=4))).collect();
        let ksum: Q = alphas.iter().zip(&spec.partition).fold(qi(0), |a, (x, &k)| a + x * qi(k as i64));
        let mut pts = alphas.clone();
        let constant;
        if zeros.is_empty() {
            let centre = ksum / qi(spec.m as i64);
            for p in pts.iter_mut() {
                *p -= &centre;
            }
            constant = q(rng.gen_range(-9..=9), rng.gen_range(1..=3));
        } else {
            let j = zeros[0];
            let x0 = -ksum / qi(j as i64);
            pts.push(x0.clone());
            let mults: Vec<usize> = group_layout(spec).iter().map(|l| l.0).collect();
            let anti = derivative_poly(spec.m, &pts, &mults).integral();
            constant = -anti.eval(&x0);
        }
        if let Ok(pt) = StratumPoint::from_critical_points(spec, &pts, constant) {
            if pt.taus.iter().all(|t| !t.is_zero()) {
                return Some(pt);
            }
        }
    }
    None
}

/// `(g_ii, beta)` as functions of `tau` near `pt`, by finite differences through
/// the Newton realization. Returns the rotation coefficients `beta_ij`.
pub fn stratum_rotation_coefficients(pt: &StratumPoint<C>, h: f64) -> Result<Vec<Vec<C>>, StrataError> {
    let spec = pt.spec.clone();
    let base = pt.clone();
    let n = spec.dim();
    let h_of = move |tau: &[C]| -> Vec<C> {
        match solve_stratum_point(&spec, tau, &base).and_then(|p| induced_metric(&p)) {
            Ok(g) => g.diag().iter().map(|x| x.sqrt()).collect(),
            Err(_) => vec![C::new(f64::NAN, 0.0); tau.len()],
        }
    };
    let h0 = h_of(&pt.taus);
    // consistent sqrt branch with the base point
    let h_fixed = |tau: &[C]| -> Vec<C> {
        let v = h_of(tau);
        v.iter().zip(&h0).map(|(a, b)| if (a - b).norm() > (a + b).norm() { -a } else { *a }).collect()
    };
    let mut beta = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        let d = numerics::diff(&h_fixed, &pt.taus, i, h);
        for j in 0..n {
            if i != j {
                beta[i][j] = d[j] / h0[i];
            }
        }
    }
    Ok(beta)
}

// ---------------------------------------------------------------------------
// classification in canonical coordinates

/// Graph function for a Monge slot `u^slot = h(tau)`.
#[derive(Clone, Debug)]
pub enum GraphFn {
    Zero,
    Coordinate(usize),
    /// `tau^i + b`
    Shifted(usize, f64),
    /// `sum_a lin_a tau^a + sum_ab quad_ab tau^a tau^b + constant`
    Quadratic { lin: Vec<f64>, quad: Vec<Vec<f64>>, constant: f64 },
}

impl GraphFn {
    fn eval(&self, tau: &[C]) -> (C, Vec<C>) {
        let n = tau.len();
        let zero = C::new(0.0, 0.0);
        match self {
            GraphFn::Zero => (zero, vec![zero; n]),
            GraphFn::Coordinate(i) => {
                let mut g = vec![zero; n];
                g[*i] = C::new(1.0, 0.0);
                (tau[*i], g)
            }
            GraphFn::Shifted(i, b) => {
                let mut g = vec![zero; n];
                g[*i] = C::new(1.0, 0.0);
                (tau[*i] + b, g)
            }
            GraphFn::Quadratic { lin, quad, constant } => {
                let mut v = C::new(*constant, 0.0);
                let mut g = vec![zero; n];
                for a in 0..n {
                    v += tau[a] * lin[a];
                    g[a] += C::new(lin[a], 0.0);
                    for b in 0..n {
                        v += tau[a] * tau[b] * quad[a][b];
                        g[a] += tau[b] * quad[a][b];
                        g[b] += tau[a] * quad[a][b];
                    }
                }
                (v, g)
            }
        }
    }
}

/// Submanifold of the canonical chart given by `u^free[a] = tau^a` and
/// `u^slot = h(tau)` for every graph slot.
#[derive(Clone, Debug)]
pub struct MongeGraph {
    pub m: usize,
    pub free: Vec<usize>,
    pub graphs: Vec<(usize, GraphFn)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    /// max |Xi^a_{bc}|
    pub obstruction: f64,
    /// max |<E, n^a>|
    pub euler_normal: f64,
    /// max |<e, n^a>|
    pub unity_normal: f64,
}

impl MongeGraph {
    pub fn n(&self) -> usize {
        self.free.len()
    }

    /// `u(tau)` and the tangent vectors `du/dtau^a`.
    pub fn embed(&self, tau: &[C]) -> (Vec<C>, Vec<Vec<C>>) {
        let n = self.n();
        let zero = C::new(0.0, 0.0);
        let mut u = vec![zero; self.m];
        let mut t = vec![vec![zero; self.m]; n];
        for (a, &s) in self.free.iter().enumerate() {
            u[s] = tau[a];
            t[a][s] = C::new(1.0, 0.0);
        }
        for (s, h) in &self.graphs {
            let (v, g) = h.eval(tau);
            u[*s] = v;
            for a in 0..n {
                t[a][*s] = g[a];
            }
        }
        (u, t)
    }

    /// Normals from the level-set gradients of `phi = h - u^slot`, raised with
    /// the diagonal metric `eta` and orthonormalized by Gram-Schmidt.
    pub fn normals(&self, tau: &[C], eta: &[C]) -> Vec<Vec<C>> {
        let zero = C::new(0.0, 0.0);
        let mut out: Vec<Vec<C>> = vec![];
        let ip = |x: &[C], y: &[C]| -> C { (0..self.m).map(|i| x[i] * y[i] * eta[i]).sum() };
        for (s, h) in &self.graphs {
            let (_, g) = h.eval(tau);
            let mut dphi = vec![zero; self.m];
            for (a, &f) in self.free.iter().enumerate() {
                dphi[f] = g[a];
            }
            dphi[*s] = C::new(-1.0, 0.0);
            let mut v: Vec<C> = (0..self.m).map(|i| dphi[i] / eta[i]).collect();
            for w in &out {
                let c = ip(&v, w);
                for i in 0..self.m {
                    v[i] -= c * w[i];
                }
            }
            let norm = ip(&v, &v).sqrt();
            out.push(v.iter().map(|x| x / norm).collect());
        }
        out
    }

    /// `Xi^a_{bc} = sum_i T_b^i T_c^i n^a_i` with `n^a_i = eta_ii N^a^i`, plus
    /// the normal components of `E = sum u^i d_i` and `e = sum d_i`.
    pub fn classify(&self, tau: &[C], eta: &[C]) -> ClassificationReport {
        let (u, t) = self.embed(tau);
        let normals = self.normals(tau, eta);
        let n = self.n();
        let mut xi: f64 = 0.0;
        let mut en: f64 = 0.0;
        let mut un: f64 = 0.0;
        for nv in &normals {
            let ni: Vec<C> = (0..self.m).map(|i| nv[i] * eta[i]).collect();
            for b in 0..n {
                for c in 0..n {
                    let v: C = (0..self.m).map(|i| t[b][i] * t[c][i] * ni[i]).sum();
                    xi = xi.max(v.norm());
                }
            }
            en = en.max((0..self.m).map(|i| u[i] * ni[i]).sum::<C>().norm());
            un = un.max(ni.iter().sum::<C>().norm());
        }
        ClassificationReport { obstruction: xi, euler_normal: en, unity_normal: un }
    }
}

/// Random graph that is not natural: a quadratic in `tau` with a nonzero
/// quadratic part for one of its slots.
pub fn random_non_natural_graph(m: usize, n: usize, rng: &mut ChaCha8Rng) -> MongeGraph {
    let mut graphs = vec![];
    for s in n..m {
        let lin: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let quad: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        graphs.push((s, GraphFn::Quadratic { lin, quad, constant: rng.gen_range(-1.0..1.0) }));
    }
    MongeGraph { m, free: (0..n).collect(), graphs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius_an::a3_flat_coordinates;
    use crate::numerics::rng;

    fn spec(s: &str) -> StratumSpec {
        StratumSpec::parse(s).unwrap()
    }

    #[test]
    fn enumeration_dimension_two() {
        let s = enumerate_strata(2).unwrap();
        let b: Vec<String> = s.iter().map(|x| x.braces()).collect();
        assert_eq!(b, vec!["{1,1}", "{2}", "{1,0}"]);
        let arrows = nesting_arrows(&s);
        assert_eq!(arrows.len(), 2);
    }

    #[test]
    fn enumeration_dimension_three_matches_lattice() {
        let s = enumerate_strata(3).unwrap();
        let mut b: Vec<String> = s.iter().map(|x| x.braces()).collect();
        b.sort();
        let mut want = vec!["{1,1,1}", "{1,1,0}", "{1,0,0}", "{2,1}", "{2,0}", "{3}"];
        want.sort();
        assert_eq!(b, want);
        let arrows: Vec<(String, String)> =
            nesting_arrows(&s).iter().map(|(a, c)| (a.braces(), c.braces())).collect();
        let mut want_arrows = vec![
            ("{1,1,1}", "{1,1,0}"),
            ("{1,1,0}", "{1,0,0}"),
            ("{1,1,1}", "{2,1}"),
            ("{1,1,0}", "{2,0}"),
            ("{2,1}", "{1,0,0}"),
            ("{2,1}", "{2,0}"),
            ("{2,1}", "{3}"),
        ];
        want_arrows.sort();
        let mut got = arrows.clone();
        got.sort();
        assert_eq!(got, want_arrows.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect::<Vec<_>>());
    }

    #[test]
    fn counts_are_partition_sums() {
        let mu = [1, 1, 2, 3, 5, 7, 11];
        for m in 1..=6 {
            let want: usize = (1..=m).map(|n| mu[n]).sum();
            assert_eq!(enumerate_strata(m).unwrap().len(), want);
        }
        assert_eq!(enumerate_strata(1).unwrap(), vec![StratumSpec::ambient(1)]);
        assert!(enumerate_strata(0).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let s = StratumSpec::new(vec![2, 4], 2).unwrap();
        assert_eq!(s.label(), "4+2|0,0");
        assert_eq!(StratumSpec::parse("4+2|0,0").unwrap(), s);
        assert_eq!(spec("3|").m, 3);
        assert!(StratumSpec::parse("2+x|").is_err());
        assert!(StratumSpec::parse("2|0,1").is_err());
    }

    #[test]
    fn zero_groups_fit_the_degree() {
        for m in 1..=6 {
            for s in enumerate_strata(m).unwrap() {
                let z = s.zero_groups();
                assert_eq!(z.iter().sum::<usize>(), s.zeroed);
                assert!(z.iter().map(|j| j + 1).sum::<usize>() <= m + 1);
            }
        }
    }

    #[test]
    fn a3_caustic_realization() {
        // alpha = (c, -2c) with k = (2, 1): p' = 4 (z - c)^2 (z + 2c)
        let s = spec("2+1|");
        let c = q(1, 3);
        let pt = StratumPoint::from_critical_points(&s, &[c.clone(), -c.clone() * qi(2)], qi(0)).unwrap();
        let want = Polynomial::from_roots(&[(c.clone(), 2), (-c.clone() * qi(2), 1)]).scale(&qi(4));
        assert_eq!(pt.dp(), want);
        assert!(StratumPoint::from_critical_points(&s, &[c.clone(), c.clone()], qi(0)).is_err());
        assert!(StratumPoint::from_critical_points(&s, &[qi(1), qi(1)], qi(0)).is_err());
    }

    #[test]
    fn a4_double_double_realization() {
        let s = spec("2+2|");
        let c = q(2, 5);
        let pt = StratumPoint::from_critical_points(&s, &[c.clone(), -c.clone()], qi(1)).unwrap();
        let want = Polynomial::from_roots(&[(c.clone(), 2), (-c.clone(), 2)]).scale(&qi(5));
        assert_eq!(pt.dp(), want);
    }

    #[test]
    fn frame_conditions_exact_on_a3_caustic() {
        let s = spec("2+1|");
        let pt = StratumPoint::from_critical_points(&s, &[q(1, 2), qi(-1)], q(3, 7)).unwrap();
        let fr = tangent_frame(&pt).unwrap();
        let (a, b) = frame_form_residuals(&pt, &fr);
        assert_eq!((a, b), (0.0, 0.0));
        let g = induced_metric(&pt).unwrap().diag();
        for (j, f) in fr.frame_polys.iter().enumerate() {
            assert_eq!(f.coeff(2), g[j].clone() * qi(4));
        }
        assert_eq!(g.iter().fold(qi(0), |a, b| a + b), qi(0));
    }

    #[test]
    fn simple_roots_reduce_to_second_derivative() {
        let pt = sample_stratum_point(&StratumSpec::ambient(3), &mut rng(1));
        let g = induced_metric(&pt).unwrap().diag();
        let p2 = pt.dp().derivative();
        for (gi, grp) in g.iter().zip(&pt.groups) {
            assert!((gi - C::new(1.0, 0.0) / p2.eval(&grp.point)).norm() < 1e-12);
        }
    }

    #[test]
    fn every_small_stratum_realizes() {
        let mut r = rng(5);
        for m in 1..=5 {
            for s in enumerate_strata(m).unwrap() {
                let pt = sample_stratum_point(&s, &mut r);
                let fr = tangent_frame(&pt).unwrap();
                let (a, b) = frame_form_residuals(&pt, &fr);
                assert!(a < 1e-9 && b < 1e-9, "{s}: {a} {b}");
                let gram = frame_gram(&pt, &fr).unwrap();
                let g = induced_metric(&pt).unwrap().diag();
                for i in 0..s.dim() {
                    for j in 0..s.dim() {
                        let want = if i == j { g[i] } else { C::new(0.0, 0.0) };
                        assert!((gram[i][j] - want).norm() < 1e-9, "{s}");
                    }
                }
                if m >= 2 {
                    let total: C = g.iter().sum::<C>() + zero_group_residues(&pt).unwrap().iter().sum::<C>();
                    assert!(total.norm() < 1e-9, "{s}");
                }
                if s.is_top_caustic() && m >= 2 {
                    assert!(g[0].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn frame_derivatives_exact() {
        let mut r = rng(9);
        for m in 2..=5 {
            for s in enumerate_strata(m).unwrap() {
                if let Some(pt) = sample_stratum_point_exact(&s, &mut r) {
                    let fr = tangent_frame(&pt).unwrap();
                    for pairs in frame_derivative_pairs(&pt, &fr) {
                        for (a, b) in pairs {
                            assert_eq!(a, b, "{s}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn egoroff_on_caustic() {
        let pt = sample_stratum_point(&spec("2+1|"), &mut rng(3));
        let beta = stratum_rotation_coefficients(&pt, 1e-4).unwrap();
        assert!((beta[0][1] - beta[1][0]).norm() < 1e-7, "{beta:?}");
    }

    #[test]
    fn induced_product_on_natural_strata() {
        let mut r = rng(17);
        for s in enumerate_strata(4).unwrap() {
            let pt = sample_stratum_point(&s, &mut r);
            let fr = tangent_frame(&pt).unwrap();
            if s.is_top_caustic() {
                assert!(induced_product(&pt.unfolding(), &fr.frame_polys).is_err());
                continue;
            }
            let ip = induced_product(&pt.unfolding(), &fr.frame_polys).unwrap();
            assert!(ip.normal_residual < 1e-9, "{s}: {}", ip.normal_residual);
            assert!(ip.compatibility_residual() < 1e-9);
            assert!(ip.associativity_residual() < 1e-9);
        }
    }

    #[test]
    fn non_natural_hyperplane_breaks_associativity() {
        // a generic plane through a point of A_3, spanned by two fixed t-directions
        let pt = crate::frobenius_an::sample_rational(3, &mut rng(2));
        let t = a3_flat_coordinates(&pt.a);
        let tf = crate::frobenius_an::a3_t_frame(&t);
        let v1 = &tf[0].scale(&qi(1)) + &tf[1].scale(&q(2, 3));
        let v2 = &tf[1].scale(&q(-1, 2)) + &tf[2].scale(&qi(1));
        let ip = induced_product(&pt, &[v1, v2]).unwrap();
        assert!(ip.associativity_residual() > 1e-3);
        assert!(ip.normal_residual > 1e-3);
    }

    #[test]
    fn identity_splits_by_stratum_type() {
        let mut r = rng(23);
        for m in 2..=4 {
            for s in enumerate_strata(m).unwrap() {
                let Some(pt) = sample_stratum_point_exact(&s, &mut r) else { continue };
                if s.is_top_caustic() {
                    continue;
                }
                let fr = tangent_frame(&pt).unwrap();
                let amb = pt.unfolding();
                let (top, perp) = identity_decomposition(&amb, &fr.frame_polys).unwrap();
                if s.is_pure_caustic() {
                    assert!(perp.is_zero(), "{s}");
                } else {
                    assert!(!perp.is_zero(), "{s}");
                    let dp = amb.dp();
                    for x in &fr.frame_polys {
                        assert!(quotient_multiply(x, &perp, &dp).is_zero(), "{s}");
                    }
                }
                let dp = amb.dp();
                assert_eq!(quotient_multiply(&top, &top, &dp), top);
                assert_eq!(quotient_multiply(&perp, &perp, &dp), perp);
                assert!(quotient_multiply(&top, &perp, &dp).is_zero());
            }
        }
    }

    #[test]
    fn ideal_property_separates_discriminants_from_caustics() {
        let mut r = rng(31);
        let d = sample_stratum_point(&spec("1+1|0"), &mut r);
        let fr = tangent_frame(&d).unwrap();
        assert!(ideal_residual(&d.unfolding(), &fr.frame_polys).unwrap() < 1e-9);
        let c = sample_stratum_point(&spec("2+1|"), &mut r);
        let fr = tangent_frame(&c).unwrap();
        assert!(ideal_residual(&c.unfolding(), &fr.frame_polys).unwrap() > 1e-6);
    }

    #[test]
    fn classification_of_graphs() {
        let eta = [C::new(0.7, 0.0), C::new(-1.3, 0.0), C::new(0.4, 0.2)];
        let tau = [C::new(0.3, 0.1), C::new(-0.8, 0.0)];
        for s in enumerate_strata(3).unwrap().iter().filter(|s| s.dim() == 2) {
            let rep = s.monge_graph().classify(&tau, &eta);
            assert!(rep.obstruction < 1e-12 && rep.euler_normal < 1e-12, "{s}: {rep:?}");
            assert_eq!(rep.unity_normal < 1e-12, s.is_pure_caustic(), "{s}");
        }
        let shifted = MongeGraph { m: 3, free: vec![0, 1], graphs: vec![(2, GraphFn::Shifted(0, 1.0))] };
        let rep = shifted.classify(&tau, &eta);
        assert!(rep.obstruction < 1e-12 && rep.euler_normal > 1e-3);
        let quad = MongeGraph {
            m: 3,
            free: vec![0, 1],
            graphs: vec![(2, GraphFn::Quadratic { lin: vec![0.0, 0.0], quad: vec![vec![1.0, 0.0], vec![0.0, 0.0]], constant: 0.0 })],
        };
        assert!(quad.classify(&tau, &eta).obstruction > 1e-3);
    }
}
