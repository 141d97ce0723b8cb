//! Quasilinear systems `u_T = A(u) u_X`: Lax-derived dispersionless Toda
//! flows and their modified form, conserved densities, Hamiltonian
//! operators of hydrodynamic type, a periodic-grid evolver, reductions onto
//! strata, the A_3 density recursion and the restriction conditions on
//! characteristic speeds.

use crate::a3_atlas;
use crate::frobenius_an::{a3_flat_coordinates, flat_frame, FrobError, UnfoldingPoint};
use crate::polyalg::{binom_q, laurent_power, q_to_f64, qi, roots, LaurentSeries, MPoly, PolyError, Polynomial, Ring, C, Q};
use crate::strata::{StrataError, StratumPoint, StratumSpec};
use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Blow-up threshold: stop once `max |u_x| > 1/(GRADIENT_FACTOR dx)`.
pub const GRADIENT_FACTOR: f64 = 10.0;
pub const MAX_CFL: f64 = 0.5;
pub const MIN_GRID: usize = 16;
/// Tolerance for condition C when reducing, on unit-scaled data.
pub const REDUCTION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum HydroError {
    #[error("Toda flow needs M >= 2 and n >= 1 (got M = {m}, n = {n})")]
    BadTodaIndex { m: usize, n: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Strata(#[from] StrataError),
    #[error(transparent)]
    Frob(#[from] FrobError),
    #[error("Lax equation left a z^{power} term outside the field range")]
    SpuriousPower { power: i64 },
    #[error("modified variables: {0}")]
    Roots(String),
    #[error("CFL number {cfl:.4} exceeds {MAX_CFL}")]
    Cfl { cfl: f64 },
    #[error("grid needs at least {MIN_GRID} points, got {0}")]
    GridTooSmall(usize),
    #[error("system has {expected} fields, state has {got}")]
    FieldMismatch { expected: usize, got: usize },
    #[error("not reducible onto {label}: speeds of slots {i} and {j} differ by {gap:.3e}")]
    NotReducible { label: String, i: usize, j: usize, gap: f64 },
    #[error("speed of slot {slot} is not finite on {label}")]
    InfiniteSpeed { label: String, slot: usize },
    #[error("symbolic system required: {0}")]
    NotSymbolic(String),
    #[error("density recursion has no solution at (alpha = {alpha}, p = {p})")]
    InconsistentRecursion { alpha: usize, p: usize },
    #[error("index alpha = {0} outside 1..=3")]
    BadIndex(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    LaxDerived,
    PaperExplicit,
    Restricted,
    Hamiltonian,
    Modified,
}

/// Polynomial with `f64` coefficients for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<u32>)>,
}

impl CompiledPoly {
    pub fn new(p: &MPoly) -> Self {
        CompiledPoly { terms: p.terms().map(|(m, c)| (q_to_f64(c), m.to_vec())).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, m)| c * m.iter().enumerate().map(|(i, &e)| x[i].powi(e as i32)).product::<f64>()).sum()
    }

    pub fn eval_c(&self, x: &[C]) -> C {
        self.terms
            .iter()
            .map(|(c, m)| m.iter().enumerate().fold(C::new(*c, 0.0), |acc, (i, &e)| acc * x[i].powi(e as i32)))
            .sum()
    }
}

type MatrixFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
type SpeedFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum FlowMatrix {
    Symbolic { entries: Vec<Vec<MPoly>>, compiled: Vec<Vec<CompiledPoly>> },
    Numeric(MatrixFn),
}

/// `u_T = A(u) u_X`, optionally with known characteristic speeds.
#[derive(Clone)]
pub struct HydroSystem {
    pub names: Vec<String>,
    pub matrix: FlowMatrix,
    pub speeds: Option<SpeedFn>,
    pub provenance: Provenance,
}

impl fmt::Debug for HydroSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HydroSystem")
            .field("names", &self.names)
            .field("symbolic", &self.symbolic().is_some())
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl HydroSystem {
    pub fn from_symbolic(names: Vec<String>, entries: Vec<Vec<MPoly>>, provenance: Provenance) -> Self {
        let compiled = entries.iter().map(|r| r.iter().map(CompiledPoly::new).collect()).collect();
        HydroSystem { names, matrix: FlowMatrix::Symbolic { entries, compiled }, speeds: None, provenance }
    }

    pub fn numeric(names: Vec<String>, f: MatrixFn, provenance: Provenance) -> Self {
        HydroSystem { names, matrix: FlowMatrix::Numeric(f), speeds: None, provenance }
    }

    /// Diagonal system `u^i_T = lambda^i(u) u^i_X`.
    pub fn diagonal(names: Vec<String>, speeds: SpeedFn, provenance: Provenance) -> Self {
        let s = speeds.clone();
        let f: MatrixFn = Arc::new(move |u: &[f64]| {
            let l = s(u);
            (0..l.len()).map(|i| (0..l.len()).map(|j| if i == j { l[i] } else { 0.0 }).collect()).collect()
        });
        HydroSystem { names, matrix: FlowMatrix::Numeric(f), speeds: Some(speeds), provenance }
    }

    pub fn n_fields(&self) -> usize {
        self.names.len()
    }

    pub fn symbolic(&self) -> Option<&Vec<Vec<MPoly>>> {
        match &self.matrix {
            FlowMatrix::Symbolic { entries, .. } => Some(entries),
            FlowMatrix::Numeric(_) => None,
        }
    }

    pub fn matrix_at(&self, u: &[f64]) -> Vec<Vec<f64>> {
        match &self.matrix {
            FlowMatrix::Symbolic { compiled, .. } => compiled.iter().map(|r| r.iter().map(|p| p.eval(u)).collect()).collect(),
            FlowMatrix::Numeric(f) => f(u),
        }
    }

    pub fn rhs(&self, u: &[f64], ux: &[f64]) -> Vec<f64> {
        self.matrix_at(u).iter().map(|row| row.iter().zip(ux).map(|(a, b)| a * b).sum()).collect()
    }

    /// `Some(true)` when the symbolic matrix has no off-diagonal entries.
    pub fn is_diagonal(&self) -> Option<bool> {
        if self.speeds.is_some() {
            return Some(true);
        }
        self.symbolic().map(|m| m.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, p)| i == j || p.is_zero())))
    }

    /// Largest `|lambda|` at `u`.
    pub fn spectral_radius(&self, u: &[f64]) -> f64 {
        if let Some(s) = &self.speeds {
            return s(u).iter().fold(0.0, |a, l| a.max(l.abs()));
        }
        let a = self.matrix_at(u);
        let n = a.len();
        let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
        m.complex_eigenvalues().iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

fn field_names(m: usize, toda: bool) -> Vec<String> {
    match (m, toda) {
        (2, true) => vec!["S".into(), "P".into()],
        (3, true) => vec!["S".into(), "P".into(), "Q".into()],
        (2, false) => vec!["u".into(), "v".into()],
        (3, false) => vec!["u".into(), "v".into(), "w".into()],
        (_, true) => (0..m).map(|k| format!("S{}", m as i64 - 2 - k as i64)).collect(),
        (_, false) => (0..m).map(|k| format!("v{}", k + 1)).collect(),
    }
}

/// `L = z^(M-1) + sum_k f_k z^(M-2-k)` with field `f_k` as variable `k`; the
/// fields are the coefficients `S^(M-2)`, ..., `S^(-1)`.
pub fn toda_lax(m: usize) -> LaurentSeries<MPoly> {
    let mut terms = vec![(m as i64 - 1, MPoly::one())];
    for k in 0..m {
        terms.push((m as i64 - 2 - k as i64, MPoly::var(k)));
    }
    LaurentSeries::from_terms(&terms)
}

/// `(L^(n/(M-1)))_+` with field coefficients.
pub fn toda_generator(m: usize, n: usize) -> Result<LaurentSeries<MPoly>, HydroError> {
    if m < 2 || n < 1 {
        return Err(HydroError::BadTodaIndex { m, n });
    }
    let e = Q::new(qi(n as i64).to_integer(), qi(m as i64 - 1).to_integer());
    Ok(laurent_power(&toda_lax(m), &e, 0)?.positive_part()?)
}

/// Flow `L_T = {P, L}` with `{f, g} = z (f_z g_X - f_X g_z)` and
/// `P = (L^(n/(M-1)))_+`.
pub fn toda_flow(m: usize, n: usize) -> Result<HydroSystem, HydroError> {
    let l = toda_lax(m);
    let p = toda_generator(m, n)?;
    let (pz, lz) = (p.d_dz(), l.d_dz());
    let lo = -1i64;
    let hi = m as i64 - 2;
    let mut a = vec![vec![MPoly::zero(); m]; m];
    for k in 0..m {
        let dl = LaurentSeries::monomial(MPoly::one(), m as i64 - 2 - k as i64);
        let dp = p.map_coeffs(|c| c.diff(k));
        let term = pz.mul(&dl).sub(&dp.mul(&lz)).shift(1);
        for (power, c) in term.terms() {
            if c.is_zero() {
                continue;
            }
            if power < lo || power > hi {
                return Err(HydroError::SpuriousPower { power });
            }
            a[(hi - power) as usize][k] = c.clone();
        }
    }
    Ok(HydroSystem::from_symbolic(field_names(m, true), a, Provenance::LaxDerived))
}

/// `e_1, ..., e_M` in variables `0..M`.
pub fn elementary_symmetric(m: usize) -> Vec<MPoly> {
    // coefficients of prod (z + v_i), built up one factor at a time
    let mut e = vec![MPoly::one()];
    for i in 0..m {
        let mut next = vec![MPoly::zero(); e.len() + 1];
        for (k, ek) in e.iter().enumerate() {
            next[k] = &next[k] + ek;
            next[k + 1] = &next[k + 1] + &(ek * &MPoly::var(i));
        }
        e = next;
    }
    e.into_iter().skip(1).collect()
}

/// The Toda flow in modified variables, `z L = prod (z + v_i)`:
/// `v_j,T = v_j [P_X(-v_j) - P_z(-v_j) v_j,X]`.
pub fn modified_flow(m: usize, n: usize) -> Result<HydroSystem, HydroError> {
    let p = toda_generator(m, n)?;
    let sym = elementary_symmetric(m);
    let deg = p.max_deg().unwrap_or(0).max(0) as usize;
    let pv = Polynomial::new((0..=deg).map(|k| p.coeff(k as i64).substitute(&sym)).collect());
    let pz = pv.derivative();
    let mut a = vec![vec![MPoly::zero(); m]; m];
    for (j, row) in a.iter_mut().enumerate() {
        let vj = MPoly::var(j);
        let at = -vj.clone();
        for (k, entry) in row.iter_mut().enumerate() {
            let dk = pv.map(|c| c.diff(k)).eval(&at);
            let mut e = &vj * &dk;
            if j == k {
                e = &e - &(&vj * &pz.eval(&at));
            }
            *entry = e;
        }
    }
    Ok(HydroSystem::from_symbolic(field_names(m, false), a, Provenance::Modified))
}

/// Modified variables: `v_i = -` the roots of `z^M + sum_k S_k z^(M-1-k)`,
/// returned in decreasing order. Errors when a root is not real.
pub fn to_modified(s: &[f64]) -> Result<Vec<f64>, HydroError> {
    let m = s.len();
    let mut c = vec![0.0; m + 1];
    c[m] = 1.0;
    for (k, sk) in s.iter().enumerate() {
        c[m - 1 - k] = *sk;
    }
    let r = roots(&Polynomial::new(c)).map_err(|e| HydroError::Roots(e.to_string()))?;
    let mut v = vec![];
    for z in r {
        if z.im.abs() > 1e-8 * (1.0 + z.norm()) {
            return Err(HydroError::Roots(format!("complex root {z}")));
        }
        v.push(-z.re);
    }
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(v)
}

/// `S_k = e_(k+1)(v)`.
pub fn from_modified(v: &[f64]) -> Vec<f64> {
    elementary_symmetric(v.len()).iter().map(|e| e.eval_f64(v)).collect()
}

fn compositions(n: u32, parts: usize, f: &mut dyn FnMut(&[u32])) {
    fn rec(left: u32, parts: usize, acc: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if acc.len() + 1 == parts {
            acc.push(left);
            f(acc);
            acc.pop();
            return;
        }
        for r in 0..=left {
            acc.push(r);
            rec(left - r, parts, acc, f);
            acc.pop();
        }
    }
    if parts == 0 {
        return;
    }
    rec(n, parts, &mut vec![], f)
}

/// `Q^(n) = sum_{|r| = n} prod binom(n/(M-1), r_i) v_i^(r_i)` as a polynomial.
pub fn conserved_q_poly(n: u32, m: usize) -> MPoly {
    let e = Q::new((n as i64).into(), (m as i64 - 1).into());
    let mut acc = MPoly::zero();
    compositions(n, m, &mut |r: &[u32]| {
        let c = r.iter().fold(Q::one(), |c, &ri| c * binom_q(&e, ri));
        acc = &acc + &MPoly::term(c, r);
    });
    acc
}

/// Exact evaluation of `Q^(n)` at `v`.
pub fn conserved_q<S: Ring>(n: u32, m: usize, v: &[S]) -> S {
    let e = Q::new((n as i64).into(), (m as i64 - 1).into());
    let mut acc = S::zero();
    compositions(n, m, &mut |r: &[u32]| {
        let c = r.iter().fold(Q::one(), |c, &ri| c * binom_q(&e, ri));
        let mut t = S::from_rational(&c);
        for (vi, &ri) in v.iter().zip(r) {
            for _ in 0..ri {
                t = t * vi.clone();
            }
        }
        acc = acc.clone() + t;
    });
    acc
}

/// Periodic grid on `[0, 2 pi)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridState {
    pub n: usize,
    pub dx: f64,
    pub t: f64,
    /// `fields[f][i]`
    pub fields: Vec<Vec<f64>>,
}

impl GridState {
    pub fn from_fields(fields: Vec<Vec<f64>>) -> Result<Self, HydroError> {
        let n = fields.first().map_or(0, |f| f.len());
        if n < MIN_GRID || fields.iter().any(|f| f.len() != n) {
            return Err(HydroError::GridTooSmall(n));
        }
        Ok(GridState { n, dx: 2.0 * std::f64::consts::PI / n as f64, t: 0.0, fields })
    }

    pub fn sample(n: usize, n_fields: usize, init: impl Fn(f64) -> Vec<f64>) -> Result<Self, HydroError> {
        let dx = 2.0 * std::f64::consts::PI / n as f64;
        let pts: Vec<Vec<f64>> = (0..n).map(|i| init(i as f64 * dx)).collect();
        Self::from_fields((0..n_fields).map(|f| pts.iter().map(|p| p[f]).collect()).collect())
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.fields.iter().map(|f| f[i]).collect()
    }

    /// `int_0^(2 pi) density(u) dx`; the trapezoid rule on a periodic grid.
    pub fn integral(&self, density: &dyn Fn(&[f64]) -> f64) -> f64 {
        (0..self.n).map(|i| density(&self.point(i))).sum::<f64>() * self.dx
    }

    pub fn max_gradient(&self) -> f64 {
        self.fields.iter().flat_map(|f| d_dx(f, self.dx)).fold(0.0, |a, g| a.max(g.abs()))
    }
}

/// Fourth-order central difference on a periodic grid.
pub fn d_dx(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let at = |k: isize| f[(i as isize + k).rem_euclid(n as isize) as usize];
            (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * dx)
        })
        .collect()
}

fn time_derivative(sys: &HydroSystem, fields: &[Vec<f64>], dx: f64) -> Vec<Vec<f64>> {
    let nf = fields.len();
    let n = fields[0].len();
    let ux: Vec<Vec<f64>> = fields.iter().map(|f| d_dx(f, dx)).collect();
    let mut out = vec![vec![0.0; n]; nf];
    let mut u = vec![0.0; nf];
    let mut d = vec![0.0; nf];
    for i in 0..n {
        for f in 0..nf {
            u[f] = fields[f][i];
            d[f] = ux[f][i];
        }
        for (f, r) in sys.rhs(&u, &d).into_iter().enumerate() {
            out[f][i] = r;
        }
    }
    out
}

fn axpy(a: &[Vec<f64>], b: &[Vec<f64>], s: f64) -> Vec<Vec<f64>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + s * q).collect()).collect()
}

fn rk4_step(sys: &HydroSystem, fields: &[Vec<f64>], dx: f64, dt: f64) -> Vec<Vec<f64>> {
    let k1 = time_derivative(sys, fields, dx);
    let k2 = time_derivative(sys, &axpy(fields, &k1, dt / 2.0), dx);
    let k3 = time_derivative(sys, &axpy(fields, &k2, dt / 2.0), dx);
    let k4 = time_derivative(sys, &axpy(fields, &k3, dt), dx);
    fields
        .iter()
        .enumerate()
        .map(|(f, row)| {
            row.iter()
                .enumerate()
                .map(|(i, x)| x + dt / 6.0 * (k1[f][i] + 2.0 * k2[f][i] + 2.0 * k3[f][i] + k4[f][i]))
                .collect()
        })
        .collect()
}

/// Named pointwise function of the fields.
pub struct Monitor {
    pub name: String,
    pub f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl Monitor {
    pub fn new(name: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Monitor { name: name.into(), f: Box::new(f) }
    }
}

#[derive(Default)]
pub struct EvolveOptions {
    /// Densities whose integrals should be conserved.
    pub conserved: Vec<Monitor>,
    /// Pointwise constraints, reported as `max |c|` over the grid.
    pub constraints: Vec<Monitor>,
    /// Record diagnostics every this many steps (0 means only at the end).
    pub record_every: usize,
    pub keep_snapshots: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlowUpKind {
    NonFinite,
    GradientCatastrophe,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowUp {
    pub kind: BlowUpKind,
    pub step: usize,
    pub t: f64,
    pub max_gradient: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub cfl: f64,
    pub max_cfl: f64,
    pub steps_taken: usize,
    pub times: Vec<f64>,
    /// Relative drift `|I(t) - I(0)| / |I(0)|` (absolute when `I(0) = 0`).
    pub drift: Vec<Series>,
    pub initial_integrals: Vec<f64>,
    pub constraint: Vec<Series>,
    pub blow_up: Option<BlowUp>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub final_state: GridState,
    pub snapshots: Vec<GridState>,
    pub diagnostics: Diagnostics,
}

pub fn cfl_number(sys: &HydroSystem, state: &GridState, dt: f64) -> f64 {
    let lam = (0..state.n).map(|i| sys.spectral_radius(&state.point(i))).fold(0.0, f64::max);
    dt * lam / state.dx
}

/// RK4 in time, fourth-order central differences in space. Refuses to start
/// when the CFL number exceeds `MAX_CFL`; stops early on blow-up.
pub fn evolve(
    sys: &HydroSystem,
    state: &GridState,
    dt: f64,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<Trajectory, HydroError> {
    if state.fields.len() != sys.n_fields() {
        return Err(HydroError::FieldMismatch { expected: sys.n_fields(), got: state.fields.len() });
    }
    let cfl = cfl_number(sys, state, dt);
    if !(cfl < MAX_CFL) {
        return Err(HydroError::Cfl { cfl });
    }
    let initial: Vec<f64> = opts.conserved.iter().map(|m| state.integral(&*m.f)).collect();
    let mut diag = Diagnostics {
        cfl,
        max_cfl: cfl,
        steps_taken: 0,
        times: vec![],
        drift: opts.conserved.iter().map(|m| Series { name: m.name.clone(), values: vec![] }).collect(),
        initial_integrals: initial.clone(),
        constraint: opts.constraints.iter().map(|m| Series { name: m.name.clone(), values: vec![] }).collect(),
        blow_up: None,
    };
    let record = |s: &GridState, d: &mut Diagnostics| {
        d.times.push(s.t);
        for (k, m) in opts.conserved.iter().enumerate() {
            let i = s.integral(&*m.f);
            let scale = if initial[k].abs() > 1e-300 { initial[k].abs() } else { 1.0 };
            d.drift[k].values.push((i - initial[k]).abs() / scale);
        }
        for (k, m) in opts.constraints.iter().enumerate() {
            let c = (0..s.n).map(|i| (m.f)(&s.point(i)).abs()).fold(0.0, f64::max);
            d.constraint[k].values.push(c);
        }
    };
    let mut cur = state.clone();
    let mut snaps = vec![];
    record(&cur, &mut diag);
    if opts.keep_snapshots {
        snaps.push(cur.clone());
    }
    let limit = 1.0 / (GRADIENT_FACTOR * cur.dx);
    for step in 1..=steps {
        cur.fields = rk4_step(sys, &cur.fields, cur.dx, dt);
        cur.t += dt;
        diag.steps_taken = step;
        let finite = cur.fields.iter().flatten().all(|x| x.is_finite());
        let grad = if finite { cur.max_gradient() } else { f64::NAN };
        if !finite || grad > limit {
            let kind = if finite { BlowUpKind::GradientCatastrophe } else { BlowUpKind::NonFinite };
            diag.blow_up = Some(BlowUp { kind, step, t: cur.t, max_gradient: grad });
            break;
        }
        let last = step == steps;
        if (opts.record_every > 0 && step % opts.record_every == 0) || last {
            diag.max_cfl = diag.max_cfl.max(cfl_number(sys, &cur, dt));
            record(&cur, &mut diag);
            if opts.keep_snapshots {
                snaps.push(cur.clone());
            }
        }
    }
    Ok(Trajectory { final_state: cur, snapshots: snaps, diagnostics: diag })
}

/// Solution of `u_T = u u_X` with `u(x, 0) = u0(x)` by characteristics:
/// `u = u0(x + u t)`, solved by fixed-point iteration.
pub fn riemann_characteristics(u0: &dyn Fn(f64) -> f64, x: f64, t: f64) -> f64 {
    let mut u = u0(x);
    for _ in 0..200 {
        let next = u0(x + u * t);
        if (next - u).abs() < 1e-15 {
            return next;
        }
        u = next;
    }
    u
}

/// `(A dH)^i = g^ij d_X (dH_j) - g^is Gamma^j_sk t^k_X dH_j` on the grid, with
/// `gamma[j][s][k] = Gamma^j_sk` and the evolver's spatial stencil.
pub fn hamiltonian_apply(
    g: &dyn Fn(&[f64]) -> Vec<Vec<f64>>,
    gamma: &dyn Fn(&[f64]) -> Vec<Vec<Vec<f64>>>,
    state: &GridState,
    grad: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let nf = state.fields.len();
    let tx: Vec<Vec<f64>> = state.fields.iter().map(|f| d_dx(f, state.dx)).collect();
    let dgrad: Vec<Vec<f64>> = grad.iter().map(|f| d_dx(f, state.dx)).collect();
    let mut out = vec![vec![0.0; state.n]; nf];
    for i in 0..state.n {
        let t = state.point(i);
        let gm = g(&t);
        let gam = gamma(&t);
        for a in 0..nf {
            let mut s = 0.0;
            for j in 0..nf {
                s += gm[a][j] * dgrad[j][i];
                for sidx in 0..nf {
                    for k in 0..nf {
                        s -= gm[a][sidx] * gam[j][sidx][k] * tx[k][i] * grad[j][i];
                    }
                }
            }
            out[a][i] = s;
        }
    }
    out
}

/// `u_T = g Hess(h) u_X` for a constant metric `g`.
pub fn flat_hamiltonian_system(names: Vec<String>, g: Vec<Vec<f64>>, h: &MPoly) -> HydroSystem {
    let n = g.len();
    let hess: Vec<Vec<CompiledPoly>> = (0..n).map(|i| (0..n).map(|j| CompiledPoly::new(&h.diff(i).diff(j))).collect()).collect();
    let f: MatrixFn = Arc::new(move |u: &[f64]| {
        let hm: Vec<Vec<f64>> = hess.iter().map(|r| r.iter().map(|p| p.eval(u)).collect()).collect();
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| g[i][k] * hm[k][j]).sum()).collect()).collect()
    });
    HydroSystem::numeric(names, f, Provenance::Hamiltonian)
}

// ---------------------------------------------------------------------------
// Diagonal systems and reductions

#[derive(Clone)]
pub struct DiagonalSystem {
    pub name: String,
    pub n: usize,
    pub speeds: SpeedFn,
}

/// Multi-component dispersionless KdV: `lambda^i = sum_r u^r + 2 u^i`.
pub fn dkdv_system(n: usize) -> DiagonalSystem {
    DiagonalSystem {
        name: format!("dkdv{n}"),
        n,
        speeds: Arc::new(|u: &[f64]| {
            let s: f64 = u.iter().sum();
            u.iter().map(|x| s + 2.0 * x).collect()
        }),
    }
}

/// Speeds of the dKdV system reduced onto `(k_1, ..., k_n)`:
/// `sum_r k_r tau^r + 2 tau^i`.
pub fn dkdv_reduced_speeds(k: &[usize], tau: &[C]) -> Vec<C> {
    let s: C = k.iter().zip(tau).map(|(&kr, t)| t * kr as f64).sum();
    tau.iter().map(|t| s + t * 2.0).collect()
}

/// `g_ii = prod_{r != i} (u^r - u^i)^(k_r) / phi_i(u^i)`; `k = 1` on the
/// ambient space.
pub fn dkdv_metric(u: &[C], k: &[usize], phi: &dyn Fn(usize, C) -> C) -> Vec<C> {
    (0..u.len())
        .map(|i| {
            let p: C = (0..u.len()).filter(|&r| r != i).map(|r| (u[r] - u[i]).powi(k[r] as i32)).product();
            p / phi(i, u[i])
        })
        .collect()
}

/// Flat coordinates of the 3-component dKdV metric:
/// `t1 = s1`, `t2 = s2 - s1^2/4`, `t3 = s3 - s1 t2/2` with `s_k` the
/// elementary symmetric functions of `u`.
pub fn dkdv_flat_chart() -> [MPoly; 3] {
    let e = elementary_symmetric(3);
    let t1 = e[0].clone();
    let t2 = &e[1] - &e[0].pow(2).scale(&Q::new(1.into(), 4.into()));
    let t3 = &e[2] - &(&e[0] * &t2).scale(&Q::new(1.into(), 2.into()));
    [t1, t2, t3]
}

/// Printed flat-chart data: `(g1^ij, g2^ij(t), E(t), e(t))`.
pub fn dkdv_flat_data(t: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let g1 = vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]];
    let g2 = vec![
        vec![0.0, -1.0, t[0] / 2.0],
        vec![-1.0, 0.0, t[1] / 2.0],
        vec![t[0] / 2.0, t[1] / 2.0, t[2]],
    ];
    let euler = vec![t[0], 2.0 * t[1], 3.0 * t[2]];
    let unity = vec![3.0, t[0] / 2.0, -t[1] / 2.0];
    (g1, g2, euler, unity)
}

#[derive(Clone, Debug, Serialize)]
pub struct DkdvChartReport {
    pub g1: f64,
    pub g2: f64,
    pub euler: f64,
    pub unity: f64,
}

impl DkdvChartReport {
    pub fn max(&self) -> f64 {
        self.g1.max(self.g2).max(self.euler).max(self.unity)
    }
}

/// Push the canonical data (`g1^ii = 1/g_ii`, `g2^ii = u^i/g_ii`,
/// `E = sum u^i d_i`, `e = sum d_i`) through the flat chart and compare with
/// the printed matrices.
pub fn dkdv_chart_residuals(u: &[f64]) -> DkdvChartReport {
    let chart = dkdv_flat_chart();
    let t: Vec<f64> = chart.iter().map(|p| p.eval_f64(u)).collect();
    let jac: Vec<Vec<f64>> = chart.iter().map(|p| (0..3).map(|i| p.diff(i).eval_f64(u)).collect()).collect();
    let uc: Vec<C> = u.iter().map(|x| C::new(*x, 0.0)).collect();
    let g: Vec<f64> = dkdv_metric(&uc, &[1, 1, 1], &|_, _| C::new(1.0, 0.0)).iter().map(|z| z.re).collect();
    let (g1, g2, euler, unity) = dkdv_flat_data(&t);
    let push = |w: &dyn Fn(usize) -> f64| -> Vec<Vec<f64>> {
        (0..3).map(|a| (0..3).map(|b| (0..3).map(|i| jac[a][i] * jac[b][i] * w(i)).sum()).collect()).collect()
    };
    let p1 = push(&|i| 1.0 / g[i]);
    let p2 = push(&|i| u[i] / g[i]);
    let diff = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter().flatten().zip(y.iter().flatten()).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()))
    };
    let e_push: Vec<f64> = (0..3).map(|a| (0..3).map(|i| jac[a][i] * u[i]).sum()).collect();
    let one_push: Vec<f64> = (0..3).map(|a| (0..3).map(|i| jac[a][i]).sum()).collect();
    let vd = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    DkdvChartReport { g1: diff(&p1, &g1), g2: diff(&p2, &g2), euler: vd(&e_push, &euler), unity: vd(&one_push, &unity) }
}

/// Canonical coordinates of a stratum point: each `tau^i` repeated `k_i`
/// times, then the zeros.
pub fn embed_stratum(spec: &StratumSpec, tau: &[f64]) -> Vec<f64> {
    spec.slots().iter().map(|s| s.map_or(0.0, |a| tau[a])).collect()
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub system: HydroSystem,
    pub spec: StratumSpec,
    /// Largest speed gap inside an identified group over the samples.
    pub max_gap: f64,
    /// Largest `|lambda|` on zeroed slots over the samples.
    pub max_zero_speed: f64,
}

/// Reduce a diagonal system onto a stratum. Condition C (speeds agree inside
/// each identified group) and condition D (finite speeds on zeroed slots)
/// are checked at `samples` (points in tau) before reducing.
pub fn restrict_system(sys: &DiagonalSystem, spec: &StratumSpec, samples: &[Vec<f64>], tol: f64) -> Result<Reduction, HydroError> {
    let label = spec.label();
    if spec.m != sys.n {
        return Err(HydroError::FieldMismatch { expected: sys.n, got: spec.m });
    }
    let slots = spec.slots();
    let first: Vec<usize> = (0..spec.dim()).map(|a| slots.iter().position(|s| *s == Some(a)).unwrap()).collect();
    let mut max_gap: f64 = 0.0;
    let mut max_zero: f64 = 0.0;
    for tau in samples {
        let lam = (sys.speeds)(&embed_stratum(spec, tau));
        for (i, s) in slots.iter().enumerate() {
            match s {
                Some(a) => {
                    let j = first[*a];
                    let gap = (lam[i] - lam[j]).abs();
                    max_gap = max_gap.max(gap);
                    if !(gap <= tol * (1.0 + lam[j].abs())) {
                        return Err(HydroError::NotReducible { label, i: j, j: i, gap });
                    }
                }
                None => {
                    if !lam[i].is_finite() {
                        return Err(HydroError::InfiniteSpeed { label, slot: i });
                    }
                    max_zero = max_zero.max(lam[i].abs());
                }
            }
        }
    }
    let inner = sys.speeds.clone();
    let spec2 = spec.clone();
    let speeds: SpeedFn = Arc::new(move |tau: &[f64]| {
        let lam = inner(&embed_stratum(&spec2, tau));
        first.iter().map(|&j| lam[j]).collect()
    });
    let names = (0..spec.dim()).map(|a| format!("tau{}", a + 1)).collect();
    Ok(Reduction {
        system: HydroSystem::diagonal(names, speeds, Provenance::Restricted),
        spec: spec.clone(),
        max_gap,
        max_zero_speed: max_zero,
    })
}

/// Restrict a symbolic system to the locus where fields in the same group
/// coincide (`groups[j]` is the group of field `j`). Rows inside a group must
/// agree after substitution.
pub fn restrict_identified(sys: &HydroSystem, groups: &[usize]) -> Result<HydroSystem, HydroError> {
    let a = sys.symbolic().ok_or_else(|| HydroError::NotSymbolic("restrict_identified".into()))?;
    let ng = groups.iter().max().map_or(0, |g| g + 1);
    let subs: Vec<MPoly> = groups.iter().map(|&g| MPoly::var(g)).collect();
    let reduced: Vec<Vec<MPoly>> = a
        .iter()
        .map(|row| {
            (0..ng)
                .map(|h| {
                    row.iter().zip(groups).filter(|(_, g)| **g == h).fold(MPoly::zero(), |acc, (p, _)| &acc + &p.substitute(&subs))
                })
                .collect()
        })
        .collect();
    let mut out = vec![];
    let mut names = vec![];
    for g in 0..ng {
        let members: Vec<usize> = (0..groups.len()).filter(|&j| groups[j] == g).collect();
        let lead = members[0];
        for &j in &members[1..] {
            if reduced[j] != reduced[lead] {
                return Err(HydroError::NotReducible { label: format!("{groups:?}"), i: lead, j, gap: f64::NAN });
            }
        }
        out.push(reduced[lead].clone());
        names.push(sys.names[lead].clone());
    }
    Ok(HydroSystem::from_symbolic(names, out, Provenance::Restricted))
}

// ---------------------------------------------------------------------------
// A_3 densities

#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianDensity {
    pub alpha: usize,
    pub p: usize,
    #[serde(skip)]
    pub poly: MPoly,
    pub expression: String,
    /// Weighted degree under the Euler field.
    pub degree: String,
}

/// Monomials `t1^a t2^b t3^c` with `a + 3b/4 + c/2 = d`.
fn weighted_monomials(d: &Q) -> Vec<Vec<u32>> {
    let d4 = d * qi(4);
    if !d4.is_integer() || d4 < Q::zero() {
        return vec![];
    }
    let big = d4.to_integer();
    let dd: i64 = big.try_into().unwrap_or(0);
    let mut out = vec![];
    for a in 0..=dd / 4 {
        for b in 0..=(dd - 4 * a) / 3 {
            let rest = dd - 4 * a - 3 * b;
            if rest % 2 == 0 {
                out.push(vec![a as u32, b as u32, (rest / 2) as u32]);
            }
        }
    }
    out
}

/// Exact least-structure solve of `A x = b` by row reduction; free variables
/// are set to zero. `None` when inconsistent.
fn solve_rational(mut a: Vec<Vec<Q>>, mut b: Vec<Q>, ncols: usize) -> Option<Vec<Q>> {
    let mut pivots = vec![];
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..a.len()).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, p);
        b.swap(row, p);
        let inv = Q::one() / a[row][col].clone();
        for x in a[row].iter_mut() {
            *x = &*x * &inv;
        }
        b[row] = &b[row] * &inv;
        for r in 0..a.len() {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..ncols {
                    let sub = &f * &a[row][c];
                    a[r][c] = &a[r][c] - &sub;
                }
                let sub = &f * &b[row];
                b[r] = &b[r] - &sub;
            }
        }
        pivots.push(col);
        row += 1;
    }
    if b[row..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = b[r].clone();
    }
    Some(x)
}

/// `h_(alpha,p)` for `p = 0..=p_max` from `h_(alpha,0) = eta_(alpha b) t^b` and
/// `d_b d_g h_(alpha,p) = c_bg^d d_d h_(alpha,p-1)`, homogeneous of weight
/// `3/2 - w_alpha + p` with no free constants (none survive for `p >= 1`).
pub fn generate_densities(alpha: usize, p_max: usize) -> Result<Vec<HamiltonianDensity>, HydroError> {
    if !(1..=3).contains(&alpha) {
        return Err(HydroError::BadIndex(alpha));
    }
    let eta = a3_atlas::eta();
    let w = a3_atlas::weights();
    let c = a3_atlas::structure_constants();
    let names = ["t1", "t2", "t3"];
    let a = alpha - 1;
    let h0 = (0..3).fold(MPoly::zero(), |acc, b| &acc + &MPoly::var(b).scale(&eta[a][b]));
    let mut deg = Q::new(3.into(), 2.into()) - w[a].clone();
    let mk = |p: usize, poly: MPoly, deg: &Q| HamiltonianDensity {
        alpha,
        p,
        expression: poly.display_with(&names),
        poly,
        degree: deg.to_string(),
    };
    let mut out = vec![mk(0, h0, &deg)];
    for p in 1..=p_max {
        deg += qi(1);
        let prev = &out[p - 1].poly;
        let monos = weighted_monomials(&deg);
        // equations keyed by (b, g, monomial)
        let mut keys: Vec<(usize, usize, Vec<u32>)> = vec![];
        let mut rows: Vec<Vec<Q>> = vec![];
        let mut rhs: Vec<Q> = vec![];
        let mut index = std::collections::BTreeMap::new();
        let mut add = |key: (usize, usize, Vec<u32>), col: Option<usize>, val: Q, rows: &mut Vec<Vec<Q>>, rhs: &mut Vec<Q>| {
            let r = *index.entry(key.clone()).or_insert_with(|| {
                keys.push(key);
                rows.push(vec![Q::zero(); monos.len()]);
                rhs.push(Q::zero());
                rows.len() - 1
            });
            match col {
                Some(k) => rows[r][k] += val,
                None => rhs[r] += val,
            }
        };
        for b in 0..3 {
            for g in b..3 {
                for (k, m) in monos.iter().enumerate() {
                    let dd = MPoly::term(Q::one(), m).diff(b).diff(g);
                    for (mm, cc) in dd.terms() {
                        add((b, g, mm.to_vec()), Some(k), cc.clone(), &mut rows, &mut rhs);
                    }
                }
                let r = (0..3).fold(MPoly::zero(), |acc, d| &acc + &(&c[b][g][d] * &prev.diff(d)));
                for (mm, cc) in r.terms() {
                    add((b, g, mm.to_vec()), None, cc.clone(), &mut rows, &mut rhs);
                }
            }
        }
        let x = solve_rational(rows, rhs, monos.len()).ok_or(HydroError::InconsistentRecursion { alpha, p })?;
        let poly = monos.iter().zip(&x).fold(MPoly::zero(), |acc, (m, xk)| &acc + &MPoly::term(xk.clone(), m));
        out.push(mk(p, poly, &deg));
    }
    Ok(out)
}

/// `W^g = eta^(gd) d_d h`.
pub fn density_gradient(h: &MPoly) -> Vec<MPoly> {
    let ei = a3_atlas::eta_inv();
    (0..3).map(|g| (0..3).fold(MPoly::zero(), |acc, d| &acc + &h.diff(d).scale(&ei[g][d]))).collect()
}

/// Flow matrix `V^g_b = eta^(ge) d_e d_b h` of the density `h`.
pub fn density_flow_matrix(h: &MPoly) -> Vec<Vec<MPoly>> {
    let grad = density_gradient(h);
    (0..3).map(|g| (0..3).map(|b| grad[g].diff(b)).collect()).collect()
}

// ---------------------------------------------------------------------------
// Conditions C and D along approach sequences

#[derive(Clone, Debug, Serialize)]
pub struct ApproachSample {
    pub epsilon: f64,
    /// Largest `|u^i - u^j|` inside an identified group.
    pub u_gap: f64,
    /// Largest `|lambda^i - lambda^j|` inside an identified group, per flow.
    pub speed_gap: Vec<f64>,
    /// Largest `|u^i|` on zeroed groups.
    pub zero_u: f64,
    /// Largest `|lambda^i|` over all slots, per flow.
    pub max_speed: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub label: String,
    /// Flow labels `(alpha, level)`.
    pub flows: Vec<(usize, usize)>,
    pub samples: Vec<ApproachSample>,
    /// Speed gap at the smallest epsilon, per flow.
    pub gap_limit: Vec<f64>,
    /// Largest speed seen along the sequence, per flow.
    pub speed_bound: Vec<f64>,
}

/// Speed polynomials `w(z)` for each requested flow at ambient point `pt`.
/// Level 0: `dp/dt^alpha`; level 1 (A_3 only): the tangent polynomial of
/// `grad h_(alpha,1)`.
fn flow_polys(pt: &UnfoldingPoint<C>, flows: &[(usize, usize)], dens: &[Vec<MPoly>]) -> Result<Vec<Polynomial<C>>, HydroError> {
    let frame = flat_frame(pt)?;
    let mut out = vec![];
    for &(alpha, level) in flows {
        if level == 0 {
            out.push(frame[alpha - 1].clone());
        } else {
            let t = a3_flat_coordinates(&pt.a);
            let w: Vec<C> = dens[alpha - 1].iter().map(|p| CompiledPoly::new(p).eval_c(&t)).collect();
            let poly = frame.iter().zip(&w).fold(Polynomial::zero(), |acc, (f, wi)| &acc + &f.scale(wi));
            out.push(poly);
        }
    }
    Ok(out)
}

/// Approach a stratum point: each identified critical point of multiplicity
/// `k` splits into `x + eps omega^j` (`omega^k = 1`) and the constant term
/// moves by `eps`, so zeroed values become `eps`. Evaluates the speeds
/// `lambda^i = w(x_i)` of primary flows (level 0) and, for A_3, first
/// descendants (level 1).
pub fn speed_conditions(base: &StratumPoint<C>, flows: &[(usize, usize)], epsilons: &[f64]) -> Result<ConditionReport, HydroError> {
    let m = base.spec.m;
    let need_desc = flows.iter().any(|f| f.1 > 0);
    if need_desc && m != 3 {
        return Err(HydroError::Frob(FrobError::NoFlatChart(m)));
    }
    let mut dens = vec![];
    if need_desc {
        for alpha in 1..=3 {
            let h1 = &generate_densities(alpha, 1)?[1].poly;
            dens.push(density_gradient(h1));
        }
    }
    let constant = base.p.coeff(0);
    let mut samples = vec![];
    for &eps in epsilons {
        let mut pts: Vec<(C, usize, bool)> = vec![];
        for (gi, g) in base.groups.iter().enumerate() {
            let k = g.mult;
            for j in 0..k {
                let shift = if k > 1 { C::from_polar(eps, 2.0 * std::f64::consts::PI * j as f64 / k as f64) } else { C::zero() };
                pts.push((g.point + shift, gi, g.tau_index.is_none()));
            }
        }
        let roots: Vec<(C, usize)> = pts.iter().map(|(x, _, _)| (*x, 1)).collect();
        let dp = Polynomial::from_roots(&roots).scale(&C::new(m as f64 + 1.0, 0.0));
        let p = &dp.integral() + &Polynomial::constant(constant + eps);
        let pt = UnfoldingPoint::new((1..=m).map(|i| p.coeff(m - i)).collect());
        let polys = flow_polys(&pt, flows, &dens)?;
        let u: Vec<C> = pts.iter().map(|(x, _, _)| p.eval(x)).collect();
        let lam: Vec<Vec<C>> = polys.iter().map(|w| pts.iter().map(|(x, _, _)| w.eval(x)).collect()).collect();
        let mut u_gap: f64 = 0.0;
        let mut speed_gap = vec![0.0f64; flows.len()];
        let mut zero_u: f64 = 0.0;
        for i in 0..pts.len() {
            if pts[i].2 {
                zero_u = zero_u.max(u[i].norm());
            }
            for j in i + 1..pts.len() {
                if pts[i].1 == pts[j].1 && !pts[i].2 {
                    u_gap = u_gap.max((u[i] - u[j]).norm());
                    for (f, l) in lam.iter().enumerate() {
                        speed_gap[f] = speed_gap[f].max((l[i] - l[j]).norm());
                    }
                }
            }
        }
        let max_speed = lam.iter().map(|l| l.iter().fold(0.0f64, |a, z| a.max(z.norm()))).collect();
        samples.push(ApproachSample { epsilon: eps, u_gap, speed_gap, zero_u, max_speed });
    }
    let last = samples.iter().min_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).unwrap());
    let gap_limit = last.map_or(vec![], |s| s.speed_gap.clone());
    let speed_bound = (0..flows.len()).map(|f| samples.iter().fold(0.0f64, |a, s| a.max(s.max_speed[f]))).collect();
    Ok(ConditionReport { label: base.spec.label(), flows: flows.to_vec(), samples, gap_limit, speed_bound })
}

/// Maxwell stratum of A_3 (`t2 = 0`, equal critical values at distinct
/// critical points): speed gaps of the primary flows between the pair of
/// critical points whose values merge, along `t2 = eps`.
pub fn maxwell_speed_gaps(t1: f64, t3: f64, epsilons: &[f64]) -> Result<Vec<(f64, f64, Vec<f64>)>, HydroError> {
    let mut out = vec![];
    for &eps in epsilons {
        let t = [C::new(t1, 0.0), C::new(eps, 0.0), C::new(t3, 0.0)];
        let pt = UnfoldingPoint::new(crate::frobenius_an::a3_from_flat(&t));
        let dp = pt.dp();
        let xs = roots(&dp)?;
        let p = pt.superpotential();
        let u: Vec<C> = xs.iter().map(|x| p.eval(x)).collect();
        // the pair with the closest critical values
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..3 {
            for j in i + 1..3 {
                let d = (u[i] - u[j]).norm();
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        let frame = flat_frame(&pt)?;
        let gaps = frame.iter().map(|f| (f.eval(&xs[best.0]) - f.eval(&xs[best.1])).norm()).collect();
        out.push((eps, best.2, gaps));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::q;

    fn mp(names: &[&str], s: &[(&str, i64, i64)]) -> MPoly {
        // sum of c * var terms, c = num/den, var by name ("1" for constants)
        s.iter().fold(MPoly::zero(), |acc, (v, n, d)| {
            let c = q(*n, *d);
            let term = match names.iter().position(|x| x == v) {
                Some(i) => MPoly::var(i).scale(&c),
                None => MPoly::constant(c),
            };
            &acc + &term
        })
    }

    #[test]
    fn toda_m2_matches_explicit_system() {
        let sys = toda_flow(2, 1).unwrap();
        let a = sys.symbolic().unwrap();
        let n = ["S", "P"];
        // S_T = P_X, P_T = P S_X
        assert_eq!(a[0], vec![MPoly::zero(), MPoly::one()]);
        assert_eq!(a[1], vec![mp(&n, &[("P", 1, 1)]), MPoly::zero()]);
    }

    #[test]
    fn toda_m3_matches_explicit_system() {
        let sys = toda_flow(3, 1).unwrap();
        let a = sys.symbolic().unwrap();
        let n = ["S", "P", "Q"];
        // S_T = P_X - S S_X / 2, P_T = Q_X, Q_T = Q S_X / 2
        assert_eq!(a[0], vec![mp(&n, &[("S", -1, 2)]), MPoly::one(), MPoly::zero()]);
        assert_eq!(a[1], vec![MPoly::zero(), MPoly::zero(), MPoly::one()]);
        assert_eq!(a[2], vec![mp(&n, &[("Q", 1, 2)]), MPoly::zero(), MPoly::zero()]);
    }

    #[test]
    fn bad_toda_index() {
        assert!(matches!(toda_flow(1, 1), Err(HydroError::BadTodaIndex { .. })));
        assert!(matches!(toda_flow(2, 0), Err(HydroError::BadTodaIndex { .. })));
    }

    #[test]
    fn modified_m2_flow() {
        let sys = modified_flow(2, 1).unwrap();
        let a = sys.symbolic().unwrap();
        // u_T = u v_X, v_T = v u_X
        assert_eq!(a[0], vec![MPoly::zero(), MPoly::var(0)]);
        assert_eq!(a[1], vec![MPoly::var(1), MPoly::zero()]);
    }

    #[test]
    fn modified_m3_flow_is_half_the_printed_one() {
        let sys = modified_flow(3, 1).unwrap();
        let a = sys.symbolic().unwrap();
        // printed: u_T = u(-u_X + v_X + w_X) and cyclic
        for j in 0..3 {
            for k in 0..3 {
                let s = if j == k { -1 } else { 1 };
                assert_eq!(a[j][k], MPoly::var(j).scale(&q(s, 2)));
            }
        }
    }

    /// Chain rule through `S = e(v)`: `dS/dv A_v = A_S(e(v)) dS/dv`.
    #[test]
    fn modified_and_lax_flows_are_conjugate() {
        for (m, n) in [(2, 1), (2, 2), (3, 1), (3, 2), (4, 1)] {
            let a_s = toda_flow(m, n).unwrap().symbolic().unwrap().clone();
            let a_v = modified_flow(m, n).unwrap().symbolic().unwrap().clone();
            let e = elementary_symmetric(m);
            let jac: Vec<Vec<MPoly>> = e.iter().map(|p| (0..m).map(|k| p.diff(k)).collect()).collect();
            for i in 0..m {
                for k in 0..m {
                    let lhs = (0..m).fold(MPoly::zero(), |acc, l| &acc + &(&jac[i][l] * &a_v[l][k]));
                    let rhs = (0..m).fold(MPoly::zero(), |acc, l| &acc + &(&a_s[i][l].substitute(&e) * &jac[l][k]));
                    assert_eq!(lhs, rhs, "M = {m}, n = {n}, entry ({i},{k})");
                }
            }
        }
    }

    #[test]
    fn modified_variables_round_trip() {
        let v = to_modified(&[3.0, 2.0]).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        let s = from_modified(&[0.5, -1.25, 2.0]);
        let back = to_modified(&s).unwrap();
        assert!((back[0] - 2.0).abs() < 1e-10 && (back[2] + 1.25).abs() < 1e-10);
        assert!(matches!(to_modified(&[0.0, 1.0]), Err(HydroError::Roots(_))));
    }

    #[test]
    fn conserved_q_values() {
        assert_eq!(conserved_q_poly(1, 2), &MPoly::var(0) + &MPoly::var(1));
        assert_eq!(conserved_q(3, 4, &[qi(0), qi(0), qi(0), qi(0)]), qi(0));
    }

    /// `Q^(n)` is the `z^0` coefficient of `L^(n/(M-1))`.
    #[test]
    fn conserved_q_is_series_residue() {
        for (m, n) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 3)] {
            let e = Q::new((n as i64).into(), (m as i64 - 1).into());
            let res = laurent_power(&toda_lax(m), &e, -1).unwrap().coeff(0);
            assert_eq!(res.substitute(&elementary_symmetric(m)), conserved_q_poly(n as u32, m), "M = {m}, n = {n}");
        }
    }

    #[test]
    fn stencil_is_fourth_order() {
        let err = |n: usize| {
            let dx = 2.0 * std::f64::consts::PI / n as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * dx).sin()).collect();
            d_dx(&f, dx).iter().enumerate().fold(0.0, |a: f64, (i, d)| a.max((d - (i as f64 * dx).cos()).abs()))
        };
        let order = (err(32) / err(64)).log2();
        assert!(order > 3.8, "order {order}");
    }

    #[test]
    fn constant_data_is_stationary() {
        let sys = toda_flow(2, 1).unwrap();
        let st = GridState::sample(32, 2, |_| vec![1.5, 0.5]).unwrap();
        let tr = evolve(&sys, &st, 0.01, 10, &EvolveOptions::default()).unwrap();
        assert_eq!(tr.final_state.fields, st.fields);
    }

    #[test]
    fn cfl_violation_refused() {
        let sys = toda_flow(2, 1).unwrap();
        let st = GridState::sample(64, 2, |_| vec![2.0, 1.0]).unwrap();
        assert!(matches!(evolve(&sys, &st, 1.0, 1, &EvolveOptions::default()), Err(HydroError::Cfl { .. })));
        assert!(matches!(GridState::sample(8, 1, |_| vec![0.0]), Err(HydroError::GridTooSmall(8))));
    }

    #[test]
    fn gradient_catastrophe_reported() {
        // Riemann equation from the modified M = 2 flow with u = v
        let sys = modified_flow(2, 1).unwrap();
        let st = GridState::sample(64, 2, |x| vec![1.0 + 0.5 * x.sin(), 1.0 + 0.5 * x.sin()]).unwrap();
        let tr = evolve(&sys, &st, 0.02, 1000, &EvolveOptions::default()).unwrap();
        let b = tr.diagnostics.blow_up.expect("breaking before t = 20");
        assert_eq!(b.kind, BlowUpKind::GradientCatastrophe);
        // breaking time of u0 = 1 + sin(x)/2 is 2
        assert!(b.t > 1.0 && b.t < 2.2, "t = {}", b.t);
    }

    #[test]
    fn riemann_matches_characteristics() {
        let sys = modified_flow(2, 1).unwrap();
        let u0 = |x: f64| 1.0 + 0.05 * x.sin();
        let st = GridState::sample(128, 2, |x| vec![u0(x), u0(x)]).unwrap();
        let tr = evolve(&sys, &st, 0.01, 200, &EvolveOptions::default()).unwrap();
        let fs = &tr.final_state;
        let err = (0..fs.n).fold(0.0f64, |a, i| a.max((fs.fields[0][i] - riemann_characteristics(&u0, fs.x(i), fs.t)).abs()));
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn flat_operator_with_quadratic_hamiltonian() {
        // g constant, Gamma = 0, H = int sum (t^i)^2 / 2: A dH = g t_X
        let st = GridState::sample(32, 2, |x| vec![x.sin(), (2.0 * x).cos()]).unwrap();
        let g = |_: &[f64]| vec![vec![0.0, 1.0], vec![1.0, 2.0]];
        let gam = |_: &[f64]| vec![vec![vec![0.0; 2]; 2]; 2];
        let out = hamiltonian_apply(&g, &gam, &st, &st.fields);
        let tx: Vec<Vec<f64>> = st.fields.iter().map(|f| d_dx(f, st.dx)).collect();
        for i in 0..st.n {
            assert!((out[0][i] - tx[1][i]).abs() < 1e-12);
            assert!((out[1][i] - tx[0][i] - 2.0 * tx[1][i]).abs() < 1e-12);
        }
    }

    /// Second structure of the M = 2 chain: flat coordinates `log v_i` with
    /// `g^12 = 1`, Hamiltonian density `e^t1 + e^t2 = u + v`.
    #[test]
    fn toda_second_structure_regenerates_flow() {
        let st = GridState::sample(64, 2, |x| vec![(1.0 + 0.3 * x.sin()).ln(), (1.2 + 0.2 * x.cos()).ln()]).unwrap();
        let g = |_: &[f64]| vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let gam = |_: &[f64]| vec![vec![vec![0.0; 2]; 2]; 2];
        let grad: Vec<Vec<f64>> = st.fields.iter().map(|f| f.iter().map(|x| x.exp()).collect()).collect();
        let out = hamiltonian_apply(&g, &gam, &st, &grad);
        let sys = modified_flow(2, 1).unwrap();
        let uv = GridState::from_fields(grad.clone()).unwrap();
        let tx: Vec<Vec<f64>> = uv.fields.iter().map(|f| d_dx(f, uv.dx)).collect();
        for i in 0..st.n {
            let rhs = sys.rhs(&uv.point(i), &[tx[0][i], tx[1][i]]);
            // t_T = u_T / u
            assert!((out[0][i] - rhs[0] / grad[0][i]).abs() < 1e-12);
            assert!((out[1][i] - rhs[1] / grad[1][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dkdv_reduction_speeds() {
        let sys = dkdv_system(5);
        let spec = StratumSpec::new(vec![3, 2], 0).unwrap();
        let red = restrict_system(&sys, &spec, &[vec![0.3, -1.1], vec![2.0, 0.5]], REDUCTION_TOL).unwrap();
        let tau = [0.7, -0.4];
        let got = (red.system.speeds.as_ref().unwrap())(&tau);
        let want = dkdv_reduced_speeds(&[3, 2], &[C::new(0.7, 0.0), C::new(-0.4, 0.0)]);
        assert!((got[0] - want[0].re).abs() < 1e-14 && (got[1] - want[1].re).abs() < 1e-14);
        // restricting dKdV onto a discriminant keeps the form
        let spec = StratumSpec::new(vec![1, 1], 1).unwrap();
        let dk = dkdv_system(3);
        assert!(restrict_system(&dk, &spec, &[vec![0.2, 0.9]], REDUCTION_TOL).is_ok());
    }

    #[test]
    fn non_reducible_system_rejected() {
        let sys = DiagonalSystem { name: "x".into(), n: 2, speeds: Arc::new(|u: &[f64]| vec![u[0], 2.0 * u[1]]) };
        let spec = StratumSpec::new(vec![2], 0).unwrap();
        assert!(matches!(restrict_system(&sys, &spec, &[vec![1.0]], REDUCTION_TOL), Err(HydroError::NotReducible { .. })));
    }

    #[test]
    fn toda_m3_double_root_reduction() {
        let sys = modified_flow(3, 1).unwrap();
        let red = restrict_identified(&sys, &[0, 0, 1]).unwrap();
        let a = red.symbolic().unwrap();
        // u = v: u_T = u w_X / 2, w_T = w (2 u_X - w_X) / 2
        assert_eq!(a[0], vec![MPoly::zero(), MPoly::var(0).scale(&q(1, 2))]);
        assert_eq!(a[1], vec![MPoly::var(1), MPoly::var(1).scale(&q(-1, 2))]);
        // u = w would need row 0 to equal row 2 after substitution; the
        // asymmetric system u_T = u v_X, v_T = 2u u_X does not
        let skew = HydroSystem::from_symbolic(
            vec!["u".into(), "v".into()],
            vec![vec![MPoly::zero(), MPoly::var(0)], vec![MPoly::var(0).scale(&qi(2)), MPoly::zero()]],
            Provenance::Modified,
        );
        assert!(restrict_identified(&skew, &[0, 0]).is_err());
    }

    /// `u = v` in modified variables is the double-root locus
    /// `4P^3 + 27Q^2 - 18PQS - P^2 S^2 + 4QS^3 = 0`.
    #[test]
    fn double_root_constraint_in_toda_fields() {
        let e = elementary_symmetric(3);
        let (s, p, qq) = (&e[0], &e[1], &e[2]);
        let d = &(&(&(&p.pow(3).scale(&qi(4)) + &qq.pow(2).scale(&qi(27))) - &(&(p * qq) * s).scale(&qi(18)))
            - &(&p.pow(2) * &s.pow(2)))
            + &(qq * &s.pow(3)).scale(&qi(4));
        let on = d.substitute(&[MPoly::var(0), MPoly::var(0), MPoly::var(1)]);
        assert!(on.is_zero());
        assert!(!d.is_zero());
    }

    #[test]
    fn densities_reproduce_primary_flows() {
        let c = a3_atlas::structure_constants();
        for alpha in 1..=3 {
            let d = generate_densities(alpha, 2).unwrap();
            assert_eq!(d[0].poly, MPoly::var(3 - alpha).scale(&q(1, 4)));
            let v = density_flow_matrix(&d[1].poly);
            for g in 0..3 {
                for b in 0..3 {
                    assert_eq!(v[g][b], c[alpha - 1][b][g], "alpha {alpha} ({g},{b})");
                }
            }
            let w = a3_atlas::weights();
            for (p, h) in d.iter().enumerate() {
                let want = Q::new(3.into(), 2.into()) - w[alpha - 1].clone() + qi(p as i64);
                assert_eq!(h.poly.weighted_degree(&w), Some(want));
            }
        }
        assert!(matches!(generate_densities(4, 1), Err(HydroError::BadIndex(4))));
    }

    #[test]
    fn recursion_holds_for_generated_densities() {
        let c = a3_atlas::structure_constants();
        for alpha in 1..=3 {
            let d = generate_densities(alpha, 3).unwrap();
            for p in 1..d.len() {
                for b in 0..3 {
                    for g in 0..3 {
                        let lhs = d[p].poly.diff(b).diff(g);
                        let rhs = (0..3).fold(MPoly::zero(), |acc, k| &acc + &(&c[b][g][k] * &d[p - 1].poly.diff(k)));
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn hypergeometric_family_matches_restricted_densities() {
        // r = 2, 4, 6, 8, 10 against (1,0), (3,0), (1,1), (3,1), (1,2)
        let pairs = [(2, 1, 0), (4, 3, 0), (6, 1, 1), (8, 3, 1), (10, 1, 2)];
        for (r, alpha, p) in pairs {
            let h = &generate_densities(alpha, p).unwrap()[p].poly;
            let restricted = a3_atlas::pull_back(h);
            let hyp = a3_atlas::hypergeometric_density_poly(r).unwrap();
            assert!(a3_atlas::proportionality(&[hyp], &[restricted]).is_some(), "r = {r}");
        }
    }

    #[test]
    fn dkdv_chart_reproduces_printed_data() {
        let r = dkdv_chart_residuals(&[0.3, -1.2, 2.1]);
        assert!(r.max() < 1e-12, "{r:?}");
    }

    #[test]
    fn caustic_condition_c_for_a3() {
        let spec = StratumSpec::parse("2+1|").unwrap();
        let base = StratumPoint::from_critical_points(&spec, &[C::new(0.4, 0.1), C::new(-0.8, -0.2)], C::new(0.3, 0.0)).unwrap();
        let flows = [(1, 0), (2, 0), (3, 0), (1, 1), (2, 1), (3, 1)];
        let rep = speed_conditions(&base, &flows, &[1e-2, 1e-4, 1e-6, 1e-8]).unwrap();
        for g in &rep.gap_limit {
            assert!(*g < 1e-6, "{rep:?}");
        }
        // gaps shrink with epsilon for the non-trivial flows
        assert!(rep.samples[0].speed_gap[1] > 1e-3);
    }

    #[test]
    fn maxwell_gap_does_not_close_for_t2_flow() {
        let out = maxwell_speed_gaps(0.3, -1.0, &[1e-2, 1e-4, 1e-6]).unwrap();
        let last = out.last().unwrap();
        assert!(last.1 < 1e-4);
        assert!(last.2[1] > 0.5);
    }
}
