//! Batch front end. Exit codes: 0 success, 1 invariant failure, 2 usage or
//! schema error, 3 numeric blow-up.

use crate::a3_atlas;
use crate::frobenius_an::{canonical_chart, canonical_metric, egoroff_potential, sample_semisimple};
use crate::geometry::{
    curvature_components, pencil_linearity, semi_hamiltonian_residual, DiagonalMetricSample, FnSampler, MetricSampler,
    StratumSampler,
};
use crate::hydro::{self, CompiledPoly, EvolveOptions, GridState, HydroSystem, Monitor, Provenance};
use crate::numerics::{self, rng};
use crate::polyalg::{laurent_power, MPoly, C, Q};
use crate::strata::{
    enumerate_strata, frame_form_residuals, frame_gram, induced_metric, frame_derivative_pairs, nesting_arrows,
    random_non_natural_graph, sample_stratum_point, sample_stratum_point_exact, stratum_rotation_coefficients,
    tangent_frame, zero_group_residues, StratumSpec,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

/// Environment variable selecting the oracle precision (`double` or `exact`).
pub const PRECISION_ENV: &str = "FROBLAB_PRECISION";

#[derive(Parser, Debug)]
#[command(name = "froblab", version, about = "A_n Frobenius manifolds, strata and hydrodynamic flows")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override the default tolerance of the identity checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output path (JSON report, or a directory for `flow`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the strata of A_m with their nesting arrows.
    Strata {
        #[arg(long)]
        m: usize,
    },
    /// Run an invariant suite.
    Verify {
        target: Target,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        stratum: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        /// Number of components (dkdv).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Evolve a hydrodynamic system on a periodic grid.
    Flow(FlowArgs),
    /// Induced metric at a sampled point of a stratum.
    Metric {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        stratum: Option<String>,
    },
    /// Curvature components of the induced metric at a sampled point.
    Curvature {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        stratum: Option<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    An,
    Stratum,
    A3,
    Dkdv,
    Pencil,
}

#[derive(clap::Args, Debug, Default)]
pub struct FlowArgs {
    /// JSON run specification; command-line flags override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<SystemKind>,
    /// Number of fields (M for Toda, n for dKdV).
    #[arg(long)]
    pub m: Option<usize>,
    /// Flow index n in L_T = {(L^(n/(M-1)))_+, L}.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Field values of the constant background, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub base: Option<Vec<f64>>,
    /// Amplitudes of the sin(x) perturbation, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub amplitude: Option<Vec<f64>>,
    #[arg(long = "record-every")]
    pub record_every: Option<usize>,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// Lax-derived Toda flow in the fields S^i.
    Toda,
    /// Toda flow in modified variables.
    Modified,
    /// Multi-component dispersionless KdV.
    Dkdv,
    /// Hamiltonian flow on the A_3 swallowtail, h = u^4 - 6u^2v^2 - v^4.
    Swallowtail,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub base: Vec<f64>,
    pub amplitude: Vec<f64>,
}

/// Validated parameters of a `flow` run.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: String,
    pub system: SystemKind,
    /// Number of fields; the swallowtail flow always has two.
    #[serde(default = "default_fields")]
    pub m: usize,
    #[serde(default = "default_flow_index")]
    pub n: usize,
    pub grid_n: usize,
    pub dt: f64,
    pub steps: usize,
    pub init: InitialData,
    #[serde(default)]
    pub record_every: usize,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_flow_index() -> usize {
    1
}

fn default_fields() -> usize {
    2
}

impl RunSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.command != "flow" {
            return Err(format!("command must be \"flow\", got {:?}", self.command));
        }
        let fields = match self.system {
            SystemKind::Toda | SystemKind::Modified if self.m < 2 => return Err("Toda needs m >= 2".into()),
            SystemKind::Dkdv if self.m < 1 => return Err("dkdv needs m >= 1".into()),
            SystemKind::Swallowtail => 2,
            _ => self.m,
        };
        if self.n < 1 {
            return Err("flow index n must be >= 1".into());
        }
        if self.grid_n < hydro::MIN_GRID {
            return Err(format!("grid_n must be >= {}", hydro::MIN_GRID));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err("dt must be positive".into());
        }
        if self.init.base.len() != fields || self.init.amplitude.len() != fields {
            return Err(format!("init.base and init.amplitude need {fields} entries"));
        }
        if self.init.base.iter().chain(&self.init.amplitude).any(|x| !x.is_finite()) {
            return Err("init values must be finite".into());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON output with 17 significant digits

struct SigFormatter;

impl serde_json::ser::Formatter for SigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }
}

/// Serialize with every float printed as `d.dddddddddddddddde±x`.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut buf = vec![];
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter);
    v.serialize(&mut ser).expect("serializable report");
    String::from_utf8(buf).expect("utf8 json")
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Serialize, Clone, Debug)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `value <= tol` (NaN fails).
    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, tol, pass: value <= tol, detail: None }
    }
    /// Passes when `value > tol`.
    pub fn above(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, tol, pass: value > tol, detail: Some("expected above tol".into()) }
    }
    pub fn flag(name: impl Into<String>, pass: bool, detail: String) -> Self {
        Check { name: name.into(), value: if pass { 0.0 } else { 1.0 }, tol: 0.0, pass, detail: Some(detail) }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub precision: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        SuiteReport { suite: suite.into(), seed, precision: precision_mode(), pass, checks }
    }
}

pub fn precision_mode() -> String {
    match std::env::var(PRECISION_ENV).as_deref() {
        Ok("exact") => "exact".into(),
        _ => "double".into(),
    }
}

fn max_into(acc: &mut f64, v: f64) {
    if v.is_nan() || v > *acc {
        *acc = v;
    }
}

/// Canonical metric identities on A_m at `samples` random semi-simple points.
pub fn suite_an(m: usize, samples: usize, seed: u64, tol: f64) -> SuiteReport {
    let mut r = rng(seed);
    let (mut off, mut sum, mut ego) = (0.0f64, 0.0f64, 0.0f64);
    let mut errors = vec![];
    for _ in 0..samples {
        let pt = sample_semisimple(m, &mut r);
        let res = canonical_chart(&pt).and_then(|ch| canonical_metric(&ch, &pt)).and_then(|g| {
            let e = egoroff_potential(&pt)?;
            Ok((g, e))
        });
        match res {
            Ok((g, e)) => {
                max_into(&mut off, g.max_off_diagonal());
                let d = g.diag();
                let scale = d.iter().fold(1.0f64, |a, x| a.max(x.norm()));
                max_into(&mut sum, d.iter().sum::<C>().norm() / scale);
                for (gi, fd) in e {
                    max_into(&mut ego, (gi - fd).norm() / gi.norm());
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    let mut checks = vec![
        Check::below(format!("A{m} canonical metric off-diagonal"), off, tol),
        Check::below(format!("A{m} sum g_ii"), sum, tol),
        Check::below(format!("A{m} Egoroff potential (relative, finite differences)"), ego, 1e-6),
    ];
    if !errors.is_empty() {
        checks.push(Check::flag("sampling", false, errors.join("; ")));
    }
    if precision_mode() == "exact" {
        checks.extend(exact_stratum_checks(&StratumSpec::ambient(m), seed));
    }
    SuiteReport::new("an", seed, checks)
}

fn exact_stratum_checks(spec: &StratumSpec, seed: u64) -> Vec<Check> {
    let mut r = rng(seed ^ 0x5eed);
    let Some(pt) = sample_stratum_point_exact(spec, &mut r) else {
        return vec![];
    };
    let mut checks = vec![];
    if let Ok(fr) = tangent_frame(&pt) {
        let ok = frame_derivative_pairs(&pt, &fr).iter().flatten().all(|(a, b)| a == b);
        checks.push(Check::flag(format!("{spec} frame derivative coefficients (exact)"), ok, "rational point".into()));
    }
    if let (Ok(g), Ok(z)) = (induced_metric(&pt), zero_group_residues(&pt)) {
        let s: Q = g.diag().iter().chain(&z).cloned().sum();
        checks.push(Check::flag(format!("{spec} residue sum (exact)"), s == Q::from_integer(0.into()), format!("sum = {s}")));
    }
    checks
}

/// Tangent-frame, induced-metric and rotation-coefficient checks on strata.
pub fn suite_stratum(specs: &[StratumSpec], samples: usize, seed: u64, tol: f64) -> SuiteReport {
    let mut r = rng(seed);
    let mut checks = vec![];
    for spec in specs {
        let (mut forms, mut off, mut sum, mut beta) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut errors = vec![];
        for _ in 0..samples {
            let pt = sample_stratum_point(spec, &mut r);
            let mut run = || -> Result<(), String> {
                let fr = tangent_frame(&pt).map_err(|e| e.to_string())?;
                let (a, b) = frame_form_residuals(&pt, &fr);
                max_into(&mut forms, a.max(b));
                let gram = frame_gram(&pt, &fr).map_err(|e| e.to_string())?;
                let scale = gram.iter().enumerate().fold(1.0f64, |s, (i, r)| s.max(r[i].norm()));
                for (i, row) in gram.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        if i != j {
                            max_into(&mut off, x.norm() / scale);
                        }
                    }
                }
                let g = induced_metric(&pt).map_err(|e| e.to_string())?.diag();
                let z = zero_group_residues(&pt).map_err(|e| e.to_string())?;
                max_into(&mut sum, g.iter().chain(&z).sum::<C>().norm() / scale);
                if spec.dim() >= 2 && !spec.is_top_caustic() {
                    let b = stratum_rotation_coefficients(&pt, 1e-4).map_err(|e| e.to_string())?;
                    for i in 0..b.len() {
                        for j in 0..i {
                            max_into(&mut beta, (b[i][j] - b[j][i]).norm());
                        }
                    }
                }
                Ok(())
            };
            if let Err(e) = run() {
                errors.push(e);
            }
        }
        checks.push(Check::below(format!("{spec} frame representations agree"), forms, 1e-8));
        checks.push(Check::below(format!("{spec} induced metric off-diagonal"), off, tol.max(1e-9)));
        checks.push(Check::below(format!("{spec} residue sum (tau and zero groups)"), sum, tol.max(1e-9)));
        checks.push(Check::below(format!("{spec} Egoroff beta symmetry"), beta, 1e-7));
        if !errors.is_empty() {
            checks.push(Check::flag(format!("{spec} sampling"), false, errors.join("; ")));
        }
        if precision_mode() == "exact" {
            checks.extend(exact_stratum_checks(spec, seed));
        }
        let eta: Vec<C> = (0..spec.m).map(|i| C::new(0.5 + 0.3 * i as f64, 0.1)).collect();
        let tau: Vec<C> = (0..spec.dim()).map(|a| C::new(0.3 - 0.45 * a as f64, 0.05)).collect();
        let rep = spec.monge_graph().classify(&tau, &eta);
        checks.push(Check::below(format!("{spec} Xi and normal Euler component"), rep.obstruction.max(rep.euler_normal), 1e-12));
        if spec.dim() < spec.m && spec.dim() > 0 {
            let g = random_non_natural_graph(spec.m, spec.dim(), &mut r);
            checks.push(Check::above(format!("{spec} random non-natural graph has Xi != 0"), g.classify(&tau, &eta).obstruction, 1e-6));
        }
    }
    SuiteReport::new("stratum", seed, checks)
}

pub fn suite_a3(seed: u64) -> SuiteReport {
    let checks = a3_atlas::verify_atlas()
        .into_iter()
        .map(|c| Check {
            name: c.name.to_string(),
            value: if c.pass { 0.0 } else { 1.0 },
            tol: 0.0,
            pass: c.pass,
            detail: Some(match c.constant {
                Some(k) => format!("constant {k}; {}", c.detail),
                None => c.detail.clone(),
            }),
        })
        .collect();
    SuiteReport::new("a3", seed, checks)
}

/// Semi-Hamiltonian property of dKdV, flatness of its `phi = 1` metric and,
/// for three components, the flat chart.
pub fn suite_dkdv(n: usize, samples: usize, seed: u64, tol: f64) -> SuiteReport {
    let mut r = rng(seed);
    let sys = hydro::dkdv_system(n);
    let ones = vec![1usize; n];
    let metric = FnSampler { n, f: move |u: &[C]| hydro::dkdv_metric(u, &ones, &|_, _| C::new(1.0, 0.0)) };
    let lam = |u: &[C]| {
        let s: C = u.iter().sum();
        u.iter().map(|x| s + x * 2.0).collect::<Vec<C>>()
    };
    let (mut semi, mut curv, mut chart) = (0.0f64, 0.0f64, 0.0f64);
    let mut errors = vec![];
    for _ in 0..samples {
        let u: Vec<f64> = (0..n).map(|i| numerics::uniform(&mut r, -1.0, 1.0) + 1.5 * i as f64).collect();
        let uc: Vec<C> = u.iter().map(|x| C::new(*x, 0.0)).collect();
        match semi_hamiltonian_residual(&lam, &metric, &uc) {
            Ok(rep) => max_into(&mut semi, rep.max_residual),
            Err(e) => errors.push(e.to_string()),
        }
        match DiagonalMetricSample::at(&metric, &uc) {
            Ok(s) => max_into(&mut curv, curvature_components(&s).max_abs),
            Err(e) => errors.push(e.to_string()),
        }
        if n == 3 {
            max_into(&mut chart, hydro::dkdv_chart_residuals(&u).max());
        }
        debug_assert_eq!((sys.speeds)(&u).len(), n);
    }
    let mut checks = vec![Check::below(format!("dKdV{n} semi-Hamiltonian residual"), semi, tol.max(1e-7))];
    if n == 3 {
        checks.push(Check::below("dKdV3 phi=1 curvature", curv, 1e-7));
        checks.push(Check::below("dKdV3 flat chart reproduces g1, g2, E, e", chart, 1e-8));
    } else {
        checks.push(Check { name: format!("dKdV{n} phi=1 curvature (reported)"), value: curv, tol: f64::INFINITY, pass: true, detail: None });
    }
    if !errors.is_empty() {
        checks.push(Check::flag("sampling", false, errors.join("; ")));
    }
    SuiteReport::new("dkdv", seed, checks)
}

/// Linearity of Christoffels and curvature along the pencil
/// `g2 + L g1` for the canonical metric of A_m and the (2,1) caustic.
pub fn suite_pencil(m: usize, samples: usize, seed: u64) -> SuiteReport {
    let mut r = rng(seed);
    let lambdas = [0.0, 0.7, -1.3];
    let mut checks = vec![];
    let mut specs = vec![StratumSpec::ambient(m)];
    if m == 3 {
        specs.push(StratumSpec::new(vec![2, 1], 0).expect("caustic label"));
    }
    for spec in specs {
        let mut dev = 0.0f64;
        let mut errors = vec![];
        for _ in 0..samples {
            let pt = sample_stratum_point(&spec, &mut r);
            let smp = StratumSampler { base: pt.clone() };
            match pencil_linearity(&smp, &pt.taus, &lambdas) {
                Ok(rep) => max_into(&mut dev, rep.max_linear_deviation.max(rep.quadratic_coefficient)),
                Err(e) => errors.push(e.to_string()),
            }
        }
        checks.push(Check::below(format!("{spec} pencil linearity"), dev, 1e-6));
        if !errors.is_empty() {
            checks.push(Check::flag(format!("{spec} sampling"), false, errors.join("; ")));
        }
    }
    SuiteReport::new("pencil", seed, checks)
}

// ---------------------------------------------------------------------------
// flow

#[derive(Serialize, Debug)]
pub struct FlowReport {
    pub spec: RunSpec,
    pub fields: Vec<String>,
    pub diagnostics: hydro::Diagnostics,
    pub final_time: f64,
}

fn toda_density(m: usize, n: usize) -> Result<MPoly, String> {
    let e = Q::new((n as i64).into(), (m as i64 - 1).into());
    Ok(laurent_power(&hydro::toda_lax(m), &e, -1).map_err(|e| e.to_string())?.coeff(0))
}

fn poly_monitor(name: &str, p: &MPoly) -> Monitor {
    let c = CompiledPoly::new(p);
    Monitor::new(name, move |u: &[f64]| c.eval(u))
}

/// Build the system and its monitors for a run specification.
pub fn build_flow(spec: &RunSpec) -> Result<(HydroSystem, EvolveOptions), String> {
    let mut opts = EvolveOptions { record_every: spec.record_every, ..Default::default() };
    let equal_init = spec.init.base.windows(2).all(|w| w[0] == w[1]) && spec.init.amplitude.windows(2).all(|w| w[0] == w[1]);
    let sys = match spec.system {
        SystemKind::Toda => {
            let sys = hydro::toda_flow(spec.m, spec.n).map_err(|e| e.to_string())?;
            for k in 1..=2 {
                opts.conserved.push(poly_monitor(&format!("Q{k}"), &toda_density(spec.m, k)?));
            }
            sys
        }
        SystemKind::Modified => {
            let sys = hydro::modified_flow(spec.m, spec.n).map_err(|e| e.to_string())?;
            for k in 1..=2 {
                opts.conserved.push(poly_monitor(&format!("Q{k}"), &hydro::conserved_q_poly(k, spec.m)));
            }
            if equal_init {
                for j in 1..spec.m {
                    opts.constraints.push(Monitor::new(&format!("v1-v{}", j + 1), move |u: &[f64]| u[0] - u[j]));
                }
            }
            sys
        }
        SystemKind::Dkdv => {
            let d = hydro::dkdv_system(spec.m);
            let names = (0..spec.m).map(|i| format!("u{}", i + 1)).collect();
            HydroSystem::diagonal(names, d.speeds.clone(), Provenance::LaxDerived)
        }
        SystemKind::Swallowtail => {
            let h = a3_atlas::swallowtail_h();
            let quarter = 0.25;
            let sys = hydro::flat_hamiltonian_system(
                vec!["u".into(), "v".into()],
                vec![vec![quarter, 0.0], vec![0.0, quarter]],
                &h,
            );
            opts.conserved.push(poly_monitor("h", &h));
            opts.conserved.push(poly_monitor("u", &MPoly::var(0)));
            opts.conserved.push(poly_monitor("v", &MPoly::var(1)));
            sys
        }
    };
    Ok((sys, opts))
}

fn write_csv(path: &Path, names: &[String], snaps: &[GridState]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for s in snaps {
        for i in 0..s.n {
            let mut rec = vec![format!("{:.16e}", s.t), format!("{:.16e}", s.x(i))];
            rec.extend(s.fields.iter().map(|f| format!("{:.16e}", f[i])));
            w.write_record(&rec)?;
        }
    }
    w.flush()
}

/// Merge a run-spec file with command-line overrides.
pub fn resolve_runspec(args: &FlowArgs, tol: Option<f64>, out: Option<PathBuf>) -> Result<RunSpec, String> {
    let mut v: Value = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("run spec is not JSON: {e}"))?
        }
        None => serde_json::json!({ "command": "flow" }),
    };
    let obj = v.as_object_mut().ok_or("run spec must be a JSON object")?;
    let mut set = |k: &str, x: Value| {
        obj.insert(k.to_string(), x);
    };
    if let Some(s) = args.system {
        set("system", serde_json::to_value(s).expect("enum"));
    }
    if let Some(x) = args.m {
        set("m", x.into());
    }
    if let Some(x) = args.n {
        set("n", x.into());
    }
    if let Some(x) = args.grid_n {
        set("grid_n", x.into());
    }
    if let Some(x) = args.dt {
        set("dt", x.into());
    }
    if let Some(x) = args.steps {
        set("steps", x.into());
    }
    if let Some(x) = args.record_every {
        set("record_every", x.into());
    }
    if let Some(x) = tol {
        set("tol", x.into());
    }
    if let Some(x) = &out {
        set("out", x.to_string_lossy().into_owned().into());
    }
    if args.base.is_some() || args.amplitude.is_some() {
        let mut init = obj.get("init").cloned().unwrap_or_else(|| serde_json::json!({}));
        if let Some(b) = &args.base {
            init["base"] = serde_json::to_value(b).expect("floats");
        }
        if let Some(a) = &args.amplitude {
            init["amplitude"] = serde_json::to_value(a).expect("floats");
        }
        obj.insert("init".into(), init);
    }
    let spec: RunSpec = serde_json::from_value(v).map_err(|e| format!("run spec: {e}"))?;
    spec.validate()?;
    Ok(spec)
}

/// Run a flow; returns the report and the exit code (0 or 3).
pub fn run_flow(spec: &RunSpec) -> Result<(FlowReport, i32), String> {
    let (sys, opts) = build_flow(spec)?;
    let nf = sys.n_fields();
    let init = &spec.init;
    let state = GridState::sample(spec.grid_n, nf, |x| (0..nf).map(|f| init.base[f] + init.amplitude[f] * x.sin()).collect())
        .map_err(|e| e.to_string())?;
    let opts = EvolveOptions { keep_snapshots: spec.out.is_some(), ..opts };
    let tr = hydro::evolve(&sys, &state, spec.dt, spec.steps, &opts).map_err(|e| e.to_string())?;
    if let Some(dir) = &spec.out {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        write_csv(&dir.join("trajectory.csv"), &sys.names, &tr.snapshots).map_err(|e| e.to_string())?;
    }
    let code = if tr.diagnostics.blow_up.is_some() { EXIT_BLOWUP } else { EXIT_OK };
    Ok((
        FlowReport { spec: spec.clone(), fields: sys.names.clone(), final_time: tr.final_state.t, diagnostics: tr.diagnostics },
        code,
    ))
}

// ---------------------------------------------------------------------------
// metric / curvature

#[derive(Serialize, Debug)]
pub struct MetricReport {
    pub stratum: String,
    pub tau_re: Vec<f64>,
    pub tau_im: Vec<f64>,
    pub g_re: Vec<f64>,
    pub g_im: Vec<f64>,
    pub zero_group_residues_re: Vec<f64>,
}

fn parse_stratum(m: usize, label: Option<&str>) -> Result<StratumSpec, String> {
    let spec = match label {
        Some(l) => StratumSpec::parse(l).map_err(|e| e.to_string())?,
        None => StratumSpec::ambient(m),
    };
    if spec.m != m {
        return Err(format!("stratum {spec} lives in A_{}, not A_{m}", spec.m));
    }
    Ok(spec)
}

fn check_m(m: usize) -> Result<(), String> {
    if m == 0 || m > 12 {
        Err(format!("m must be in 1..=12, got {m}"))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// entry point

#[derive(Debug)]
enum Outcome {
    Report(Value, i32),
    Usage(String),
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) if !p.is_dir() && p.extension().is_some_and(|e| e == "json") => std::fs::write(p, text),
        Some(p) if p.is_dir() => std::fs::write(p.join("report.json"), text),
        _ => writeln!(out, "{text}"),
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let seed = cli.seed;
    let report = |r: SuiteReport| {
        let code = if r.pass { EXIT_OK } else { EXIT_FAILURE };
        Outcome::Report(serde_json::to_value(&r).expect("report"), code)
    };
    match &cli.command {
        Command::Strata { m } => {
            if let Err(e) = check_m(*m) {
                return Outcome::Usage(e);
            }
            let s = enumerate_strata(*m).expect("validated m");
            let arrows: Vec<(String, String)> = nesting_arrows(&s).iter().map(|(a, b)| (a.label(), b.label())).collect();
            let list: Vec<Value> = s
                .iter()
                .map(|x| serde_json::json!({"label": x.label(), "braces": x.braces(), "dim": x.dim(), "pure_caustic": x.is_pure_caustic(), "pure_discriminant": x.is_pure_discriminant()}))
                .collect();
            Outcome::Report(serde_json::json!({"m": m, "count": s.len(), "strata": list, "arrows": arrows}), EXIT_OK)
        }
        Command::Verify { target, m, stratum, samples, n } => {
            let tol = cli.tol.unwrap_or(1e-10);
            match target {
                Target::An => {
                    let m = m.unwrap_or(3);
                    if let Err(e) = check_m(m) {
                        return Outcome::Usage(e);
                    }
                    report(suite_an(m, samples.unwrap_or(50), seed, tol))
                }
                Target::Stratum => {
                    let specs = match (stratum, m) {
                        (Some(l), _) => match StratumSpec::parse(l) {
                            Ok(s) => vec![s],
                            Err(e) => return Outcome::Usage(e.to_string()),
                        },
                        (None, Some(m)) => match check_m(*m) {
                            Ok(()) => enumerate_strata(*m).expect("validated m"),
                            Err(e) => return Outcome::Usage(e),
                        },
                        (None, None) => return Outcome::Usage("verify stratum needs --stratum or --m".into()),
                    };
                    report(suite_stratum(&specs, samples.unwrap_or(20), seed, tol))
                }
                Target::A3 => report(suite_a3(seed)),
                Target::Dkdv => {
                    let n = n.unwrap_or(3);
                    if n < 2 {
                        return Outcome::Usage("dkdv needs n >= 2".into());
                    }
                    report(suite_dkdv(n, samples.unwrap_or(20), seed, tol))
                }
                Target::Pencil => {
                    let m = m.unwrap_or(3);
                    if let Err(e) = check_m(m) {
                        return Outcome::Usage(e);
                    }
                    report(suite_pencil(m, samples.unwrap_or(50), seed))
                }
            }
        }
        Command::Flow(args) => {
            let spec = match resolve_runspec(args, cli.tol, cli.out.clone()) {
                Ok(s) => s,
                Err(e) => return Outcome::Usage(e),
            };
            match run_flow(&spec) {
                Ok((rep, code)) => Outcome::Report(serde_json::to_value(&rep).expect("report"), code),
                Err(e) => Outcome::Report(serde_json::json!({"error": e}), EXIT_FAILURE),
            }
        }
        Command::Metric { m, stratum } | Command::Curvature { m, stratum } => {
            if let Err(e) = check_m(*m) {
                return Outcome::Usage(e);
            }
            let spec = match parse_stratum(*m, stratum.as_deref()) {
                Ok(s) => s,
                Err(e) => return Outcome::Usage(e),
            };
            let pt = sample_stratum_point(&spec, &mut rng(seed));
            let res = (|| -> Result<Value, String> {
                let g = induced_metric(&pt).map_err(|e| e.to_string())?.diag();
                if matches!(cli.command, Command::Metric { .. }) {
                    let z = zero_group_residues(&pt).map_err(|e| e.to_string())?;
                    let rep = MetricReport {
                        stratum: spec.label(),
                        tau_re: pt.taus.iter().map(|x| x.re).collect(),
                        tau_im: pt.taus.iter().map(|x| x.im).collect(),
                        g_re: g.iter().map(|x| x.re).collect(),
                        g_im: g.iter().map(|x| x.im).collect(),
                        zero_group_residues_re: z.iter().map(|x| x.re).collect(),
                    };
                    Ok(serde_json::to_value(rep).expect("report"))
                } else {
                    let smp = StratumSampler { base: pt.clone() };
                    let s = DiagonalMetricSample::at(&smp as &dyn MetricSampler, &pt.taus).map_err(|e| e.to_string())?;
                    let mut v = serde_json::to_value(curvature_components(&s)).expect("report");
                    v["stratum"] = spec.label().into();
                    Ok(v)
                }
            })();
            match res {
                Ok(v) => Outcome::Report(v, EXIT_OK),
                Err(e) => Outcome::Report(serde_json::json!({"error": e}), EXIT_FAILURE),
            }
        }
    }
}

/// Parse `args` (including the program name), run, write the JSON report to
/// `--out` or `out`, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match dispatch(&cli) {
        Outcome::Usage(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Outcome::Report(v, code) => {
            let text = to_json(&v);
            let path = match &cli.command {
                // flow treats --out as a directory for CSV output
                Command::Flow(_) => cli.out.as_deref().filter(|p| p.is_dir()),
                _ => cli.out.as_deref(),
            };
            if let Err(e) = emit(out, path, &text) {
                let _ = writeln!(err, "error: cannot write report: {e}");
                return EXIT_USAGE;
            }
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut o = vec![];
        let mut e = vec![];
        let code = run(std::iter::once("froblab").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn strata_listing() {
        let (code, out, _) = call(&["strata", "--m", "2"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["count"], 3);
        let (code, out, _) = call(&["strata", "--m", "3"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(code, 0);
        assert_eq!(v["arrows"].as_array().unwrap().len(), 7);
    }

    #[test]
    fn strata_rejects_zero() {
        let (code, _, err) = call(&["strata", "--m", "0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("m must be"));
        assert_eq!(call(&["strata"]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&serde_json::json!({"x": 0.1, "y": [1.0, -2.5e-300], "z": f64::NAN}));
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"), "{s}");
        assert!(s.contains("null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn verify_a3_and_dkdv_pass() {
        let (code, out, _) = call(&["verify", "a3"]);
        assert_eq!(code, 0, "{out}");
        let (code, out, _) = call(&["verify", "dkdv", "--n", "3", "--samples", "5"]);
        assert_eq!(code, 0, "{out}");
    }

    #[test]
    fn reports_are_deterministic() {
        let a = call(&["verify", "an", "--m", "3", "--samples", "3", "--seed", "7"]);
        let b = call(&["verify", "an", "--m", "3", "--samples", "3", "--seed", "7"]);
        assert_eq!(a.0, 0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn malformed_runspec_is_a_usage_error() {
        let dir = std::env::temp_dir().join(format!("froblab-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.json");
        std::fs::write(&p, r#"{"command": "flow", "system": "toda", "m": 2, "grid_n": 64, "dt": 0.01, "steps": 3, "init": {"base": [1.0]}, "bogus": 1}"#).unwrap();
        assert_eq!(call(&["flow", "--spec", p.to_str().unwrap()]).0, EXIT_USAGE);
        std::fs::write(&p, "not json").unwrap();
        assert_eq!(call(&["flow", "--spec", p.to_str().unwrap()]).0, EXIT_USAGE);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn toda_run_reports_constraint_drift() {
        let (code, out, err) = call(&[
            "flow", "--system", "modified", "--m", "2", "--grid-n", "64", "--dt", "0.01", "--steps", "20", "--base", "1,1",
            "--amplitude", "0.05,0.05", "--record-every", "10",
        ]);
        assert_eq!(code, 0, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        let c = &v["diagnostics"]["constraint"][0]["values"];
        assert_eq!(c.as_array().unwrap().len(), 3);
        assert!(c[2].as_f64().unwrap() < 1e-12);
    }

    #[test]
    fn blow_up_has_its_own_exit_code() {
        let (code, out, _) = call(&[
            "flow", "--system", "modified", "--m", "2", "--grid-n", "64", "--dt", "0.02", "--steps", "1000", "--base", "1,1",
            "--amplitude", "0.5,0.5",
        ]);
        assert_eq!(code, EXIT_BLOWUP);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["diagnostics"]["blow_up"].is_object());
    }

    #[test]
    fn swallowtail_conserves_h() {
        let (code, out, err) = call(&[
            "flow", "--system", "swallowtail", "--grid-n", "128", "--dt", "0.002", "--steps", "50", "--base", "0.5,0.3",
            "--amplitude", "0.05,0.02",
        ]);
        assert_eq!(code, 0, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        let d = &v["diagnostics"]["drift"][0];
        assert_eq!(d["name"], "h");
        assert!(d["values"].as_array().unwrap().last().unwrap().as_f64().unwrap() < 1e-8);
    }

    #[test]
    fn metric_and_curvature_commands() {
        let (code, out, _) = call(&["metric", "--m", "3", "--stratum", "2+1|"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["g_re"].as_array().unwrap().len(), 2);
        let (code, out, _) = call(&["curvature", "--m", "3"]);
        assert_eq!(code, 0, "{out}");
        assert_eq!(call(&["metric", "--m", "2", "--stratum", "2+1|"]).0, EXIT_USAGE);
    }
}
