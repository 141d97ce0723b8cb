//! Curvature of diagonal metrics `g = sum g_ii (du^i)^2`: rotation
//! coefficients, Christoffel symbols, curvature components, and the checks
//! built on them (Egoroff, pencils, the Delta obstruction, semi-Hamiltonian
//! systems).
//!
//! Index conventions: `Gamma^i_{jk}`; `Gamma^{ij}_k = -g^{is} Gamma^j_{sk}`;
//! `R(d_k, d_l) d_s = R^j_{skl} d_j` with `R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]`,
//! and `R^{ij}_{kl} = g^{is} R^j_{skl}`.

use crate::numerics;
use crate::polyalg::C;
use crate::strata::{induced_metric, solve_stratum_point, tangent_frame, StratumPoint};
use serde::Serialize;
use thiserror::Error;

/// Default step for first derivatives (Richardson central differences).
pub const FD_STEP: f64 = 1e-4;
/// Step for second derivatives; smaller steps drown in rounding.
pub const FD_STEP2: f64 = 1e-3;
pub const CURVATURE_TOL_ANALYTIC: f64 = 1e-7;
pub const CURVATURE_TOL_FD: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("metric component {index} vanishes at the sample point")]
    Degenerate { index: usize },
    #[error("metric sampler failed: {0}")]
    Sampler(String),
    #[error("finite-difference stencil failed (step {step}): {detail}")]
    Stencil { step: f64, detail: String },
    #[error("u^{index} = 0: point lies on the discriminant")]
    OnDiscriminant { index: usize },
    #[error("metric is not Egoroff (max |beta_ij - beta_ji| = {0:e})")]
    NotEgoroff(f64),
    #[error("characteristic speeds {i} and {j} coincide")]
    CharacteristicCollision { i: usize, j: usize },
}

/// Metric values with first and second derivatives:
/// `dg[k][i] = d_k g_ii`, `ddg[k][l][i] = d_k d_l g_ii`.
#[derive(Clone, Debug)]
pub struct MetricJets {
    pub g: Vec<C>,
    pub dg: Vec<Vec<C>>,
    pub ddg: Vec<Vec<Vec<C>>>,
}

pub trait MetricSampler {
    fn dim(&self) -> usize;
    fn metric(&self, u: &[C]) -> Result<Vec<C>, GeomError>;
    /// Exact derivatives, when the sampler knows them.
    fn jets(&self, _u: &[C]) -> Option<MetricJets> {
        None
    }
}

/// Sampler from a closure `u -> (g_11, ..., g_nn)`.
pub struct FnSampler<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[C]) -> Vec<C>> MetricSampler for FnSampler<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn metric(&self, u: &[C]) -> Result<Vec<C>, GeomError> {
        Ok((self.f)(u))
    }
}

/// Induced metric on a stratum (the ambient A_m canonical metric when the
/// stratum is `(1,...,1)`) as a function of its coordinates `tau`.
pub struct StratumSampler {
    pub base: StratumPoint<C>,
}

impl MetricSampler for StratumSampler {
    fn dim(&self) -> usize {
        self.base.spec.dim()
    }
    fn metric(&self, tau: &[C]) -> Result<Vec<C>, GeomError> {
        let pt = solve_stratum_point(&self.base.spec, tau, &self.base).map_err(|e| GeomError::Sampler(e.to_string()))?;
        Ok(induced_metric(&pt).map_err(|e| GeomError::Sampler(e.to_string()))?.diag())
    }

    /// On the ambient chart: analytic first derivatives, second derivatives
    /// by one central difference of those.
    fn jets(&self, tau: &[C]) -> Option<MetricJets> {
        if !self.base.spec.is_ambient() {
            return None;
        }
        let n = tau.len();
        let (g, dg) = self.ambient_first_jets(tau)?;
        let mut ddg = vec![vec![vec![C::new(0.0, 0.0); n]; n]; n];
        for l in 0..n {
            let mut tp = tau.to_vec();
            let mut tm = tau.to_vec();
            tp[l] += FD_STEP;
            tm[l] -= FD_STEP;
            let (_, dp) = self.ambient_first_jets(&tp)?;
            let (_, dm) = self.ambient_first_jets(&tm)?;
            for k in 0..n {
                for i in 0..n {
                    ddg[k][l][i] = (dp[k][i] - dm[k][i]) / (2.0 * FD_STEP);
                }
            }
        }
        for k in 0..n {
            for l in 0..k {
                for i in 0..n {
                    let avg = (ddg[k][l][i] + ddg[l][k][i]) * 0.5;
                    ddg[k][l][i] = avg;
                    ddg[l][k][i] = avg;
                }
            }
        }
        Some(MetricJets { g, dg, ddg })
    }
}

impl StratumSampler {
    /// `g_i = 1/p''(alpha_i)` and `d_j g_i`, using `d_j p = f_j` with
    /// `f_j(alpha_i) = delta_ij`, so `d_j alpha_i = -f_j'(alpha_i)/p''(alpha_i)`.
    fn ambient_first_jets(&self, tau: &[C]) -> Option<(Vec<C>, Vec<Vec<C>>)> {
        let pt = solve_stratum_point(&self.base.spec, tau, &self.base).ok()?;
        let fr = tangent_frame(&pt).ok()?;
        let n = tau.len();
        let p2 = pt.p.derivative().derivative();
        let p3 = p2.derivative();
        let alpha: Vec<C> = (0..n).map(|i| pt.groups.iter().find(|g| g.tau_index == Some(i)).map(|g| g.point)).collect::<Option<_>>()?;
        let g: Vec<C> = alpha.iter().map(|a| C::new(1.0, 0.0) / p2.eval(a)).collect();
        let mut dg = vec![vec![C::new(0.0, 0.0); n]; n];
        for (j, f) in fr.frame_polys.iter().enumerate() {
            let (f1, f2) = (f.derivative(), f.derivative().derivative());
            for i in 0..n {
                let da = -f1.eval(&alpha[i]) * g[i];
                dg[j][i] = -g[i] * g[i] * (f2.eval(&alpha[i]) + p3.eval(&alpha[i]) * da);
            }
        }
        Some((g, dg))
    }
}

/// `g_rr / (u^r + shift)`: the second metric of a pencil (`shift = 0`) or a
/// general member of the contravariant pencil `g2^{rr} + L g1^{rr}`.
pub struct ShiftedSampler<'a> {
    pub inner: &'a dyn MetricSampler,
    pub shift: f64,
}

impl MetricSampler for ShiftedSampler<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn metric(&self, u: &[C]) -> Result<Vec<C>, GeomError> {
        let g = self.inner.metric(u)?;
        Ok(g.iter().zip(u).map(|(g, u)| g / (u + self.shift)).collect())
    }
    fn jets(&self, u: &[C]) -> Option<MetricJets> {
        let j = self.inner.jets(u)?;
        let n = u.len();
        let s: Vec<C> = u.iter().map(|x| C::new(1.0, 0.0) / (x + self.shift)).collect();
        // d_k s_i = -delta_ki s_i^2, d_k d_l s_i = 2 delta_ki delta_li s_i^3
        let g: Vec<C> = (0..n).map(|i| j.g[i] * s[i]).collect();
        let dg: Vec<Vec<C>> = (0..n)
            .map(|k| (0..n).map(|i| j.dg[k][i] * s[i] - if k == i { j.g[i] * s[i] * s[i] } else { C::new(0.0, 0.0) }).collect())
            .collect();
        let ddg = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        (0..n)
                            .map(|i| {
                                let mut v = j.ddg[k][l][i] * s[i];
                                if k == i {
                                    v -= j.dg[l][i] * s[i] * s[i];
                                }
                                if l == i {
                                    v -= j.dg[k][i] * s[i] * s[i];
                                }
                                if k == i && l == i {
                                    v += j.g[i] * s[i] * s[i] * s[i] * 2.0;
                                }
                                v
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Some(MetricJets { g, dg, ddg })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StencilInfo {
    pub analytic: bool,
    pub step: f64,
    pub step2: f64,
}

/// Everything the curvature formulas need at one point.
#[derive(Clone, Debug)]
pub struct DiagonalMetricSample {
    pub u: Vec<C>,
    pub g: Vec<C>,
    /// Principal square roots, fixed once at the sample point; derivatives of
    /// `H` come from those of `g` by the chain rule, so no stencil ever sees a
    /// branch cut.
    pub h: Vec<C>,
    /// `dh[k][i] = d_k H_i`
    pub dh: Vec<Vec<C>>,
    /// `ddh[k][l][i] = d_k d_l H_i`
    pub ddh: Vec<Vec<Vec<C>>>,
    /// `beta[i][j] = d_i H_j / H_i` for `i != j`, zero on the diagonal.
    pub beta: Vec<Vec<C>>,
    pub stencil: StencilInfo,
}

fn finite(v: &[C]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Jets by finite differences of `g`.
pub fn fd_jets(sampler: &dyn MetricSampler, u: &[C], h: f64, h2: f64) -> Result<MetricJets, GeomError> {
    let n = sampler.dim();
    let g = sampler.metric(u)?;
    let failed = std::cell::Cell::new(None::<String>);
    let f = |x: &[C]| -> Vec<C> {
        match sampler.metric(x) {
            Ok(v) => v,
            Err(e) => {
                failed.set(Some(e.to_string()));
                vec![C::new(f64::NAN, 0.0); n]
            }
        }
    };
    let dg: Vec<Vec<C>> = (0..n).map(|k| numerics::diff(&f, u, k, h)).collect();
    let mut ddg = vec![vec![vec![C::new(0.0, 0.0); n]; n]; n];
    for k in 0..n {
        for l in k..n {
            let d = numerics::diff2(&f, u, k, l, h2);
            ddg[k][l] = d.clone();
            ddg[l][k] = d;
        }
    }
    if let Some(detail) = failed.take() {
        return Err(GeomError::Stencil { step: h, detail });
    }
    if !finite(&g) || dg.iter().any(|v| !finite(v)) || ddg.iter().flatten().any(|v| !finite(v)) {
        return Err(GeomError::Stencil { step: h, detail: "non-finite metric values".into() });
    }
    Ok(MetricJets { g, dg, ddg })
}

impl DiagonalMetricSample {
    /// Sample at `u`, with analytic jets when the sampler supplies them and
    /// finite differences (`FD_STEP`, `FD_STEP2`) otherwise.
    pub fn at(sampler: &dyn MetricSampler, u: &[C]) -> Result<Self, GeomError> {
        Self::at_with_steps(sampler, u, FD_STEP, FD_STEP2)
    }

    pub fn at_with_steps(sampler: &dyn MetricSampler, u: &[C], h: f64, h2: f64) -> Result<Self, GeomError> {
        match sampler.jets(u) {
            Some(j) => Self::from_jets(u, &j, StencilInfo { analytic: true, step: 0.0, step2: 0.0 }),
            None => Self::from_jets(u, &fd_jets(sampler, u, h, h2)?, StencilInfo { analytic: false, step: h, step2: h2 }),
        }
    }

    pub fn from_jets(u: &[C], j: &MetricJets, stencil: StencilInfo) -> Result<Self, GeomError> {
        let n = u.len();
        let scale = j.g.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let mut h = vec![];
        for (i, g) in j.g.iter().enumerate() {
            if g.norm() <= 1e-14 * scale.max(1e-300) || g.norm() == 0.0 {
                return Err(GeomError::Degenerate { index: i });
            }
            h.push(g.sqrt());
        }
        let dh: Vec<Vec<C>> = (0..n).map(|k| (0..n).map(|i| j.dg[k][i] / (h[i] * 2.0)).collect()).collect();
        let ddh: Vec<Vec<Vec<C>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        (0..n)
                            .map(|i| j.ddg[k][l][i] / (h[i] * 2.0) - j.dg[k][i] * j.dg[l][i] / (h[i].powi(3) * 4.0))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let beta = (0..n)
            .map(|i| (0..n).map(|jx| if i == jx { C::new(0.0, 0.0) } else { dh[i][jx] / h[i] }).collect())
            .collect();
        Ok(DiagonalMetricSample { u: u.to_vec(), g: j.g.clone(), h, dh, ddh, beta, stencil })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// `d_l beta_ji`, for `j != i`.
    pub fn dbeta(&self, l: usize, j: usize, i: usize) -> C {
        self.ddh[l][j][i] / self.h[j] - self.dh[j][i] * self.dh[l][j] / (self.h[j] * self.h[j])
    }

    /// `e(beta_ij) = sum_k d_k beta_ij`
    pub fn e_beta(&self, i: usize, j: usize) -> C {
        (0..self.n()).map(|k| self.dbeta(k, i, j)).sum()
    }

    /// `E(beta_ij) = sum_k u^k d_k beta_ij`
    pub fn euler_beta(&self, i: usize, j: usize) -> C {
        (0..self.n()).map(|k| self.u[k] * self.dbeta(k, i, j)).sum()
    }

    pub fn egoroff_asymmetry(&self) -> f64 {
        let n = self.n();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                r = r.max((self.beta[i][j] - self.beta[j][i]).norm());
            }
        }
        r
    }
}

/// `beta_ij = d_i H_j / H_i`.
pub fn rotation_coefficients(sampler: &dyn MetricSampler, u: &[C]) -> Result<Vec<Vec<C>>, GeomError> {
    Ok(DiagonalMetricSample::at(sampler, u)?.beta)
}

/// Christoffel tables: `lower[i][j][k] = Gamma^i_{jk}`, `upper[i][j][k] = Gamma^{ij}_k`.
#[derive(Clone, Debug)]
pub struct Christoffel {
    pub lower: Vec<Vec<Vec<C>>>,
    pub upper: Vec<Vec<Vec<C>>>,
}

pub fn christoffel_diagonal(s: &DiagonalMetricSample) -> Christoffel {
    let n = s.n();
    let zero = C::new(0.0, 0.0);
    let mut lower = vec![vec![vec![zero; n]; n]; n];
    for i in 0..n {
        lower[i][i][i] = s.dh[i][i] / s.h[i];
        for k in 0..n {
            if k != i {
                let v = s.h[k] / s.h[i] * s.beta[k][i];
                lower[i][i][k] = v;
                lower[i][k][i] = v;
                lower[i][k][k] = -(s.h[k] / s.h[i]) * s.beta[i][k];
            }
        }
    }
    let mut upper = vec![vec![vec![zero; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                upper[i][j][k] = -lower[j][i][k] / s.g[i];
            }
        }
    }
    Christoffel { lower, upper }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureComponent {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub n: usize,
    /// Components `R^{ij}_{kl}` that the formulas allow to be nonzero.
    pub components: Vec<CurvatureComponent>,
    pub max_abs: f64,
    /// Largest violation of the four-fold relation among stored components.
    pub symmetry_residual: f64,
    /// Largest component in the pattern that must vanish; zero by construction.
    pub zero_pattern_max: f64,
    pub stencil: StencilInfo,
    #[serde(skip)]
    pub tensor: Vec<Vec<Vec<Vec<C>>>>,
}

/// `R^{ij}_{kl}` from the rotation coefficients: only `R^{ij}_{il}` and its
/// relatives `-R^{ij}_{li} = R^{ji}_{li} = -R^{ji}_{il}` survive.
pub fn curvature_components(s: &DiagonalMetricSample) -> CurvatureReport {
    let n = s.n();
    let zero = C::new(0.0, 0.0);
    let mut r = vec![vec![vec![vec![zero; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let hh = s.h[i] * s.h[j];
            for l in 0..n {
                if l == i {
                    continue;
                }
                let x = if l == j {
                    let mut v = s.dbeta(i, i, j) + s.dbeta(j, j, i);
                    for p in 0..n {
                        if p != i && p != j {
                            v += s.beta[p][j] * s.beta[p][i];
                        }
                    }
                    v / hh
                } else {
                    (s.dbeta(l, j, i) - s.beta[j][l] * s.beta[l][i]) / hh
                };
                r[i][j][i][l] = x;
                r[i][j][l][i] = -x;
                r[j][i][l][i] = x;
                r[j][i][i][l] = -x;
            }
        }
    }
    let mut components = vec![];
    let mut max_abs: f64 = 0.0;
    let mut zero_max: f64 = 0.0;
    let mut sym: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r[i][j][k][l];
                    let allowed = i != j && k != l && (k == i || l == i || k == j || l == j);
                    if allowed {
                        max_abs = max_abs.max(v.norm());
                        if v.norm() > 0.0 {
                            components.push(CurvatureComponent { i, j, k, l, re: v.re, im: v.im });
                        }
                    } else {
                        zero_max = zero_max.max(v.norm());
                    }
                    if i != j && k == i && l != i {
                        let rel = [v + r[i][j][l][i], v - r[j][i][l][i], v + r[j][i][i][l]];
                        for e in rel {
                            sym = sym.max(e.norm());
                        }
                    }
                }
            }
        }
    }
    CurvatureReport {
        n,
        components,
        max_abs,
        symmetry_residual: sym,
        zero_pattern_max: zero_max,
        stencil: s.stencil.clone(),
        tensor: r,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PencilReport {
    pub lambdas: Vec<f64>,
    /// max over `L` of `|Q(L) - Q2 - L Q1|` for `Q` in {Gamma^{ij}_k, R^{ij}_{kl}}
    pub max_linear_deviation: f64,
    /// `|second divided difference|` of `Q` over the first three `L`
    pub quadratic_coefficient: f64,
}

fn flatten(ch: &Christoffel, cr: &CurvatureReport) -> Vec<C> {
    let mut v: Vec<C> = ch.upper.iter().flatten().flatten().cloned().collect();
    v.extend(cr.tensor.iter().flatten().flatten().flatten().cloned());
    v
}

/// Pencil `g^{rr}(L) = g2^{rr} + L g1^{rr}` with `g2_rr = g1_rr / u^r`. The
/// contravariant Christoffels and curvatures should be affine in `L`.
pub fn pencil_linearity(sampler1: &dyn MetricSampler, u: &[C], lambdas: &[f64]) -> Result<PencilReport, GeomError> {
    if let Some(i) = u.iter().position(|x| x.norm() == 0.0) {
        return Err(GeomError::OnDiscriminant { index: i });
    }
    let quantities = |s: &dyn MetricSampler| -> Result<Vec<C>, GeomError> {
        let sample = DiagonalMetricSample::at(s, u)?;
        Ok(flatten(&christoffel_diagonal(&sample), &curvature_components(&sample)))
    };
    let q1 = quantities(sampler1)?;
    let q2 = quantities(&ShiftedSampler { inner: sampler1, shift: 0.0 })?;
    let mut qs = vec![];
    for &l in lambdas {
        qs.push(quantities(&ShiftedSampler { inner: sampler1, shift: l })?);
    }
    let mut dev: f64 = 0.0;
    for (ql, &l) in qs.iter().zip(lambdas) {
        for k in 0..ql.len() {
            dev = dev.max((ql[k] - q2[k] - q1[k] * l).norm());
        }
    }
    let mut quad: f64 = 0.0;
    if lambdas.len() >= 3 {
        let (a, b, c) = (lambdas[0], lambdas[1], lambdas[2]);
        for k in 0..q1.len() {
            let d2 = qs[0][k] / ((a - b) * (a - c)) + qs[1][k] / ((b - a) * (b - c)) + qs[2][k] / ((c - a) * (c - b));
            quad = quad.max(d2.norm());
        }
    }
    Ok(PencilReport { lambdas: lambdas.to_vec(), max_linear_deviation: dev, quadratic_coefficient: quad })
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    /// max `|d_k beta_ij - beta_ik beta_kj|` over distinct `i, j, k`
    pub delta_distinct: f64,
    /// max `|e(beta_ij)|`, `i != j`
    pub e_beta: f64,
    pub curvature_max: f64,
    /// max over `i != j` of `|R^{ij}_{ij} + sum_p R^{ij}_{ip} - e(beta_ij)/(H_i H_j)|`
    pub combined_identity_residual: f64,
    /// Whether "Delta vanishes" and "R vanishes" agree at tolerance `tol`.
    pub equivalence_holds: bool,
}

pub fn delta_obstruction(s: &DiagonalMetricSample, tol: f64) -> Result<DeltaReport, GeomError> {
    let asym = s.egoroff_asymmetry();
    let scale = s.beta.iter().flatten().map(|b| b.norm()).fold(1.0, f64::max);
    if asym > tol * scale {
        return Err(GeomError::NotEgoroff(asym));
    }
    let n = s.n();
    let mut dd: f64 = 0.0;
    let mut eb: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            eb = eb.max(s.e_beta(i, j).norm());
            for k in 0..n {
                if k != i && k != j {
                    dd = dd.max((s.dbeta(k, i, j) - s.beta[i][k] * s.beta[k][j]).norm());
                }
            }
        }
    }
    let cr = curvature_components(s);
    let mut comb: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut lhs = cr.tensor[i][j][i][j];
            for p in 0..n {
                if p != i && p != j {
                    lhs += cr.tensor[i][j][i][p];
                }
            }
            comb = comb.max((lhs - s.e_beta(i, j) / (s.h[i] * s.h[j])).norm());
        }
    }
    let delta_zero = dd <= tol && eb <= tol;
    let r_zero = cr.max_abs <= tol;
    Ok(DeltaReport {
        delta_distinct: dd,
        e_beta: eb,
        curvature_max: cr.max_abs,
        combined_identity_residual: comb,
        equivalence_holds: delta_zero == r_zero,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SemiHamiltonianReport {
    /// `|d_j log sqrt(g_ii) - d_j lambda^i / (lambda^j - lambda^i)|`, `i != j`
    pub residual: Vec<Vec<f64>>,
    pub max_residual: f64,
    /// max `|d_k(G^i_j) - d_j(G^i_k)|`, `G^i_j = d_j lambda^i/(lambda^j - lambda^i)`, distinct `i, j, k`
    pub compatibility: f64,
}

pub fn semi_hamiltonian_residual(
    lambda: &dyn Fn(&[C]) -> Vec<C>,
    sampler: &dyn MetricSampler,
    u: &[C],
) -> Result<SemiHamiltonianReport, GeomError> {
    let n = u.len();
    let lam = lambda(u);
    for i in 0..n {
        for j in i + 1..n {
            if (lam[i] - lam[j]).norm() <= 1e-12 * (1.0 + lam[i].norm()) {
                return Err(GeomError::CharacteristicCollision { i, j });
            }
        }
    }
    let s = DiagonalMetricSample::at(sampler, u)?;
    let gamma = |x: &[C]| -> Vec<C> {
        // G^i_j flattened as i*n + j
        let l = lambda(x);
        let mut out = vec![C::new(0.0, 0.0); n * n];
        for j in 0..n {
            let d = numerics::diff(&lambda, x, j, FD_STEP);
            for i in 0..n {
                if i != j {
                    out[i * n + j] = d[i] / (l[j] - l[i]);
                }
            }
        }
        out
    };
    let g0 = gamma(u);
    let mut res = vec![vec![0.0; n]; n];
    let mut max: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let lhs = s.dh[j][i] / s.h[i];
                res[i][j] = (lhs - g0[i * n + j]).norm();
                max = max.max(res[i][j]);
            }
        }
    }
    let mut comp: f64 = 0.0;
    if n >= 3 {
        let dg: Vec<Vec<C>> = (0..n).map(|k| numerics::diff(&gamma, u, k, FD_STEP2)).collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i != j && j != k && i != k {
                        comp = comp.max((dg[k][i * n + j] - dg[j][i * n + k]).norm());
                    }
                }
            }
        }
    }
    Ok(SemiHamiltonianReport { residual: res, max_residual: max, compatibility: comp })
}

/// `max |E(beta_ij) + beta_ij|` (homogeneity of an ambient canonical metric).
pub fn euler_beta_residual(s: &DiagonalMetricSample) -> f64 {
    let n = s.n();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                r = r.max((s.euler_beta(i, j) + s.beta[i][j]).norm());
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, rng};
    use crate::strata::{sample_stratum_point, StratumSpec};

    struct Polar;
    impl MetricSampler for Polar {
        fn dim(&self) -> usize {
            2
        }
        fn metric(&self, u: &[C]) -> Result<Vec<C>, GeomError> {
            Ok(vec![c(1.0), u[0] * u[0]])
        }
        fn jets(&self, u: &[C]) -> Option<MetricJets> {
            let z = c(0.0);
            Some(MetricJets {
                g: vec![c(1.0), u[0] * u[0]],
                dg: vec![vec![z, u[0] * 2.0], vec![z, z]],
                ddg: vec![vec![vec![z, c(2.0)], vec![z, z]], vec![vec![z, z], vec![z, z]]],
            })
        }
    }

    struct Sphere;
    impl MetricSampler for Sphere {
        fn dim(&self) -> usize {
            2
        }
        fn metric(&self, u: &[C]) -> Result<Vec<C>, GeomError> {
            Ok(vec![c(1.0), u[0].sin() * u[0].sin()])
        }
    }

    #[test]
    fn constant_metric_is_flat() {
        let s = FnSampler { n: 3, f: |_: &[C]| vec![c(2.0), c(-1.0), c(0.5)] };
        let sm = DiagonalMetricSample::at(&s, &[c(0.1), c(0.2), c(0.3)]).unwrap();
        assert!(sm.beta.iter().flatten().all(|b| b.norm() < 1e-12));
        let ch = christoffel_diagonal(&sm);
        assert!(ch.lower.iter().flatten().flatten().all(|x| x.norm() < 1e-12));
        assert!(curvature_components(&sm).max_abs < 1e-10);
    }

    #[test]
    fn polar_christoffels() {
        // r, theta: Gamma^r_{theta theta} = -r, Gamma^theta_{r theta} = 1/r
        let r = 1.7;
        let sm = DiagonalMetricSample::at(&Polar, &[c(r), c(0.4)]).unwrap();
        let ch = christoffel_diagonal(&sm);
        assert!((ch.lower[0][1][1] - c(-r)).norm() < 1e-14);
        assert!((ch.lower[1][0][1] - c(1.0 / r)).norm() < 1e-14);
        assert!((ch.lower[1][1][0] - c(1.0 / r)).norm() < 1e-14);
        assert!(ch.lower[0][0][0].norm() < 1e-14 && ch.lower[0][0][1].norm() < 1e-14);
        assert!(curvature_components(&sm).max_abs < 1e-14);
    }

    #[test]
    fn unit_sphere_curvature() {
        // R(d1,d2)d1 = -d2 for K = 1, so R^{12}_{12} = g^{11} R^2_{112} = -1
        let sm = DiagonalMetricSample::at(&Sphere, &[c(0.9), c(0.3)]).unwrap();
        let cr = curvature_components(&sm);
        assert!((cr.tensor[0][1][0][1] - c(-1.0)).norm() < 1e-6, "{:?}", cr.tensor[0][1][0][1]);
        // R^{21}_{21} = g^{22} R^1_{221} = g^{22} * g22 * (-1)... same value by symmetry
        assert!((cr.tensor[1][0][1][0] - c(-1.0)).norm() < 1e-6);
        assert!(cr.symmetry_residual < 1e-12);
        assert_eq!(cr.zero_pattern_max, 0.0);
    }

    #[test]
    fn ambient_a3_is_egoroff_and_flat() {
        let pt = sample_stratum_point(&StratumSpec::ambient(3), &mut rng(4));
        let smp = StratumSampler { base: pt.clone() };
        let s = DiagonalMetricSample::at(&smp, &pt.taus).unwrap();
        assert!(s.egoroff_asymmetry() < 1e-7);
        assert!(euler_beta_residual(&s) < 1e-6);
        let d = delta_obstruction(&s, 1e-5).unwrap();
        assert!(d.curvature_max < 1e-5 && d.e_beta < 1e-5 && d.equivalence_holds, "{d:?}");
    }

    #[test]
    fn dkdv_metric_is_flat_not_egoroff() {
        let g = |u: &[C]| -> Vec<C> {
            (0..3).map(|i| (0..3).filter(|&r| r != i).map(|r| u[r] - u[i]).product()).collect()
        };
        let s = FnSampler { n: 3, f: g };
        let u = [c(0.3), c(1.1), c(-0.7)];
        let sm = DiagonalMetricSample::at(&s, &u).unwrap();
        assert!(sm.egoroff_asymmetry() > 1e-2);
        assert!(curvature_components(&sm).max_abs < 1e-7);
        let lam = |u: &[C]| -> Vec<C> {
            let t: C = u.iter().sum();
            u.iter().map(|x| t + x * 2.0).collect()
        };
        let rep = semi_hamiltonian_residual(&lam, &s, &u).unwrap();
        assert!(rep.max_residual < 1e-7 && rep.compatibility < 1e-6, "{rep:?}");
    }

    #[test]
    fn decoupled_speeds_are_semi_hamiltonian() {
        let s = FnSampler { n: 2, f: |_: &[C]| vec![c(1.0), c(3.0)] };
        let lam = |u: &[C]| u.to_vec();
        let rep = semi_hamiltonian_residual(&lam, &s, &[c(0.2), c(0.9)]).unwrap();
        assert!(rep.max_residual < 1e-12);
        assert!(matches!(
            semi_hamiltonian_residual(&lam, &s, &[c(0.2), c(0.2)]),
            Err(GeomError::CharacteristicCollision { .. })
        ));
    }

    #[test]
    fn pencil_on_ambient_a3() {
        let pt = sample_stratum_point(&StratumSpec::ambient(3), &mut rng(8));
        let smp = StratumSampler { base: pt.clone() };
        let rep = pencil_linearity(&smp, &pt.taus, &[0.0, 0.7, -1.3]).unwrap();
        assert!(rep.max_linear_deviation < 1e-6 && rep.quadratic_coefficient < 1e-6, "{rep:?}");
    }

    #[test]
    fn pencil_zero_is_second_metric() {
        let pt = sample_stratum_point(&StratumSpec::ambient(2), &mut rng(2));
        let smp = StratumSampler { base: pt.clone() };
        let rep = pencil_linearity(&smp, &pt.taus, &[0.0]).unwrap();
        assert!(rep.max_linear_deviation < 1e-12);
        assert!(matches!(
            pencil_linearity(&smp, &[c(0.0), c(1.0)], &[0.0]),
            Err(GeomError::OnDiscriminant { index: 0 })
        ));
    }

    #[test]
    fn vanishing_component_is_rejected() {
        let s = FnSampler { n: 2, f: |_: &[C]| vec![c(0.0), c(1.0)] };
        assert!(matches!(DiagonalMetricSample::at(&s, &[c(0.0), c(0.0)]), Err(GeomError::Degenerate { index: 0 })));
    }
}
