//! Scenario runner: JSON scenarios in, JSON reports and CSV series out.
//!
//! A scenario names a family descriptor, an experiment and its parameters.
//! `run` executes one scenario, `suite` every `*.json` file of a directory.
//! Reports carry no timestamps; timing goes to a sibling `.meta.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::average::{average_shadow_point, InvariantSubsystem};
use crate::density::{cesaro_to_density_zero, density_zero_to_cesaro, dyadic_levels, IndexSet};
use crate::descriptor::FamilyDescriptor;
use crate::error::{Result, ShadowError};
use crate::family::MapFamily;
use crate::limit::{self, ExpandingSolver, FiniteExhaustive, IsometryTransport, LimitConfig, ShadowOracle};
use crate::product::{product_equivalence_check, CheckConfig, ShadowingVariant};
use crate::pseudo_orbit::{inject_defects, perturb_orbit, periodicize, seeded, Displacement, PseudoOrbit};
use crate::solver::{self, PullbackOptions, DEFAULT_MARGIN};
use crate::space::{Point, SpaceKind, StateSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Shadow,
    Periodic,
    Limit,
    Average,
    Density,
    Product,
}

/// Synthetic defect sequences, indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sequence", rename_all = "snake_case", deny_unknown_fields)]
pub enum DefectSequence {
    /// `min(1/(i+1), cap)`.
    Harmonic {
        #[serde(default = "half")]
        cap: f64,
    },
    /// `value` at perfect squares, 0 elsewhere.
    Squares {
        #[serde(default = "one")]
        value: f64,
    },
    Constant { value: f64 },
    Zero,
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl DefectSequence {
    pub fn values(&self, len: usize) -> Vec<f64> {
        match self {
            Self::Harmonic { cap } => (0..len).map(|i| (1.0 / (i + 1) as f64).min(*cap)).collect(),
            Self::Squares { value } => {
                let sq = IndexSet::squares(len);
                (0..len).map(|i| if sq.contains(i) { *value } else { 0.0 }).collect()
            }
            Self::Constant { value } => vec![*value; len],
            Self::Zero => vec![0.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    Isometry,
    Finite,
    Solver,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Second factor's δ for product checks; defaults to `delta`.
    pub delta_right: Option<f64>,
    pub margin: Option<f64>,
    pub horizon: Option<usize>,
    pub levels: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub x0: Option<Point>,
    /// One period of a periodic pseudo-orbit.
    pub points: Option<Vec<Point>>,
    pub defects: Option<DefectSequence>,
    pub displacement: Option<Displacement>,
    pub oracle: Option<OracleChoice>,
    /// Points of the invariant subset for average shadowing.
    pub a: Option<Vec<Point>>,
    pub variants: Option<Vec<ShadowingVariant>>,
    pub max_len: Option<usize>,
    pub budget: Option<usize>,
    pub tolerance: Option<f64>,
    /// Density experiment: require `|ratio - 1/2| ≤ tol/2` under horizon doubling.
    pub halving_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub family: FamilyDescriptor,
    pub experiment: Experiment,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub expect_fail: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyCertificate {
    pub name: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub name: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub experiment: Experiment,
    pub family: String,
    pub seed: u64,
    pub horizon: usize,
    pub pass: bool,
    pub expect_fail: bool,
    pub key: Option<KeyCertificate>,
    pub error: Option<ErrorSummary>,
    pub result: Option<Value>,
}

impl Report {
    /// Verdict after honouring `expect_fail`.
    pub fn as_expected(&self) -> bool {
        self.pass != self.expect_fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub scenario: String,
    pub started_unix_ms: u128,
    pub runtime_ms: f64,
}

/// A report together with its CSV series, keyed by file suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub series: Vec<(String, String)>,
}

fn invalid(path: &str, message: impl Into<String>) -> ShadowError {
    ShadowError::ConfigInvalid { path: path.into(), message: message.into() }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = match e.path().to_string() {
            p if p == "?" || p == "." => "$".to_string(),
            p => p,
        };
        invalid(&path, e.into_inner().to_string())
    })?;
    validate(&scenario)?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| invalid(&path.display().to_string(), e.to_string()))?;
    parse_scenario(&text)
}

fn positive(path: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(invalid(path, format!("expected a positive number, got {x}"))),
        _ => Ok(()),
    }
}

fn at_least_one(path: &str, v: Option<usize>) -> Result<()> {
    match v {
        Some(0) => Err(invalid(path, "expected at least 1")),
        _ => Ok(()),
    }
}

/// Schema-level checks that do not need the family to be built.
pub fn validate(s: &Scenario) -> Result<()> {
    if s.name.is_empty() || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
        return Err(invalid("name", "expected a nonempty name of [A-Za-z0-9._-]"));
    }
    let p = &s.params;
    positive("params.epsilon", p.epsilon)?;
    positive("params.delta", p.delta)?;
    positive("params.delta_right", p.delta_right)?;
    positive("params.tolerance", p.tolerance)?;
    positive("params.halving_tolerance", p.halving_tolerance)?;
    if let Some(m) = p.margin {
        if !(m > 0.0 && m < 1.0) {
            return Err(invalid("params.margin", format!("expected a number in (0, 1), got {m}")));
        }
    }
    at_least_one("params.horizon", p.horizon)?;
    at_least_one("params.levels", p.levels)?;
    at_least_one("params.trials", p.trials)?;
    at_least_one("params.max_len", p.max_len)?;
    at_least_one("params.budget", p.budget)?;
    match s.experiment {
        Experiment::Periodic if p.points.as_ref().map_or(true, Vec::is_empty) => {
            Err(invalid("params.points", "a periodic experiment needs one period of points"))
        }
        Experiment::Average if p.a.as_ref().map_or(true, Vec::is_empty) => {
            Err(invalid("params.a", "an average experiment needs the points of A"))
        }
        Experiment::Average if !s.family.is_finite() => Err(invalid("family", "average shadowing needs a finite family")),
        Experiment::Product if !matches!(s.family, FamilyDescriptor::Product { .. }) => {
            Err(invalid("family", "a product experiment needs a product descriptor"))
        }
        Experiment::Product if p.variants.as_ref().is_some_and(Vec::is_empty) => {
            Err(invalid("params.variants", "expected at least one variant"))
        }
        _ => Ok(()),
    }
}

fn default_x0(space: &StateSpace, seed: u64) -> Point {
    fn pick(space: &StateSpace, rng: &mut rand_chacha::ChaCha8Rng) -> Point {
        match &space.kind {
            SpaceKind::Circle | SpaceKind::Interval => Point::Real(rng.gen::<f64>()),
            SpaceKind::Finite { .. } => Point::state(0),
            SpaceKind::Product { left, right } => Point::pair(pick(left, rng), pick(right, rng)),
        }
    }
    pick(space, &mut seeded(seed))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| ShadowError::Io(e.to_string()))
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(crate::pseudo_orbit::csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(crate::pseudo_orbit::csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| ShadowError::Io(e.to_string()))?).map_err(|e| ShadowError::Io(e.to_string()))
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

struct Run {
    pass: bool,
    key: KeyCertificate,
    result: Value,
    series: Vec<(String, String)>,
}

fn key(name: &str, value: impl Serialize) -> Result<KeyCertificate> {
    Ok(KeyCertificate { name: name.into(), value: to_value(&value)? })
}

#[derive(Serialize)]
struct ShadowTrial {
    seed: u64,
    x0: Point,
    shadow_point: Point,
    max_error: f64,
    max_defect: f64,
    diameter_bound: f64,
    cell_diameter: f64,
    verdict: bool,
}

fn run_shadow(family: &MapFamily, p: &Params, seed: u64, horizon: usize) -> Result<Run> {
    let eps = p.epsilon.unwrap_or(0.1);
    let margin = p.margin.unwrap_or(DEFAULT_MARGIN);
    let noise = match p.delta {
        Some(d) => d,
        None => margin * (1.0 - family.sup_rate()?) * eps,
    };
    let mut trials = Vec::new();
    let mut rows = Vec::new();
    for t in 0..p.trials.unwrap_or(1) as u64 {
        let s = seed + t;
        let x0 = p.x0.clone().unwrap_or_else(|| default_x0(family.space_at(0).expect("space 0 exists"), s));
        let po = perturb_orbit(family, &x0, horizon, noise, s)?;
        let (report, _) = solver::pullback_shadow_with(family, &po, eps, margin, PullbackOptions::default())?;
        for (n, e) in report.per_step_errors.iter().enumerate() {
            rows.push(vec![t.to_string(), n.to_string(), fmt(*e)]);
        }
        trials.push(ShadowTrial {
            seed: s,
            x0,
            shadow_point: report.shadow_point.clone(),
            max_error: report.max_error(),
            max_defect: po.max_defect(),
            diameter_bound: report.diameter_bound,
            cell_diameter: report.cell_diameter,
            verdict: report.verdict && report.max_error() < eps,
        });
    }
    let worst = trials.iter().map(|t| t.max_error).fold(0.0, f64::max);
    let pass = trials.iter().all(|t| t.verdict);
    let result = serde_json::json!({ "epsilon": eps, "margin": margin, "noise": noise, "max_error": worst, "trials": trials });
    Ok(Run {
        pass,
        key: key("max_error", worst)?,
        result,
        series: vec![("errors".into(), csv_string(&["trial", "n", "error"], rows)?)],
    })
}

fn run_periodic(family: &MapFamily, p: &Params, horizon: usize) -> Result<Run> {
    let eps = p.epsilon.unwrap_or(0.05);
    let cycle = p.points.clone().unwrap_or_default();
    let period = cycle.len();
    let mut closed = cycle.clone();
    closed.push(cycle[0].clone());
    let base = PseudoOrbit::new(family, 0, closed)?;
    if let Some(d) = p.delta {
        if base.max_defect() >= d {
            return Err(ShadowError::DeltaBudgetViolated { index: 0, defect: base.max_defect(), budget: d });
        }
    }
    let po = periodicize(family, &base, period, horizon.max(period))?;
    let r = solver::periodic_shadow(family, &po, period, eps)?;
    let max_error = r.per_step_errors.iter().copied().fold(0.0, f64::max);
    let pass = r.verdict && r.return_gap < solver::FIXED_POINT_TOL && max_error < eps;
    let rows = r.per_step_errors.iter().enumerate().map(|(n, e)| vec![n.to_string(), fmt(*e)]);
    let series = vec![("errors".into(), csv_string(&["n", "error"], rows)?)];
    Ok(Run { pass, key: key("return_gap", r.return_gap)?, result: to_value(&r)?, series })
}

fn run_limit(family: &MapFamily, p: &Params, seed: u64, horizon: usize) -> Result<Run> {
    let levels = p.levels.unwrap_or(8);
    let defects = p.defects.clone().unwrap_or(DefectSequence::Harmonic { cap: 0.5 }).values(horizon);
    let rule = p.displacement.clone().unwrap_or(Displacement::Alternating);
    let x0 = p.x0.clone().unwrap_or_else(|| default_x0(family.space_at(0).expect("space 0 exists"), seed));
    let po = inject_defects(family, &x0, &defects, &rule)?;
    let choice = p.oracle.unwrap_or(if family.space_at(0)?.is_finite() {
        OracleChoice::Finite
    } else if family.is_expanding() {
        OracleChoice::Solver
    } else {
        OracleChoice::Isometry
    });
    let config = LimitConfig { eps_scale: p.epsilon.unwrap_or(1.0), levels, seed, ..LimitConfig::default() };
    let report = match choice {
        OracleChoice::Isometry => limit::limit_shadow_point(family, &po, &IsometryTransport as &dyn ShadowOracle, &config)?,
        OracleChoice::Finite => limit::limit_shadow_point(family, &po, &FiniteExhaustive, &config)?,
        OracleChoice::Solver => limit::limit_shadow_ungated(family, &po, &ExpandingSolver::default(), &config)?,
    };
    let tolerance = p.tolerance.unwrap_or(1.0 / levels as f64);
    let final_error = report.final_window_error();
    let pass = report.monotone && final_error < tolerance;
    let series = vec![("convergence".into(), report.table_csv()?)];
    let mut result = to_value(&report)?;
    result["tolerance"] = to_value(&tolerance)?;
    Ok(Run { pass, key: key("final_window_error", final_error)?, result, series })
}

fn run_average(family: MapFamily, p: &Params, horizon: usize) -> Result<Run> {
    let a = p.a.clone().unwrap_or_default();
    let x0 = p.x0.clone().unwrap_or_else(|| a[0].clone());
    let sub = InvariantSubsystem::finite(family, a)?;
    let defects = p.defects.clone().unwrap_or(DefectSequence::Squares { value: 1.0 }).values(horizon);
    let rule = p.displacement.clone().unwrap_or(Displacement::Alternating);
    let po = inject_defects(&sub.ambient, &x0, &defects, &rule)?;
    let r = average_shadow_point(&sub, &po)?;
    let tolerance = p.tolerance.unwrap_or(0.05);
    let pass = r.support_ok && r.triangle.holds && r.cesaro_error < tolerance;
    let rows = r.cesaro_series.iter().enumerate().map(|(n, c)| vec![(n + 1).to_string(), fmt(*c)]);
    let series = vec![("cesaro".into(), csv_string(&["n", "cesaro_error"], rows)?)];
    let result = serde_json::json!({
        "point": r.point,
        "cesaro_error": r.cesaro_error,
        "tolerance": tolerance,
        "exceptional_density": r.exceptional_density,
        "j_prime_density": r.surgery.j_prime_density,
        "markers_density": r.surgery.markers_density,
        "boundaries": r.surgery.decomposition.boundaries,
        "blocks": r.surgery.decomposition.blocks.len(),
        "lifted_cesaro": r.lifted_cesaro,
        "support_ok": r.support_ok,
        "triangle": r.triangle,
        "tracking": r.tracking,
        "visit_windows": r.visits.iter().map(|v| (v.epsilon, v.n)).collect::<Vec<_>>(),
    });
    Ok(Run { pass, key: key("cesaro_error", r.cesaro_error)?, result, series })
}

fn run_density(p: &Params, horizon: usize) -> Result<Run> {
    let seq = p.defects.clone().unwrap_or(DefectSequence::Squares { value: 1.0 });
    let levels = dyadic_levels(p.levels.unwrap_or(8));
    let a = seq.values(horizon);
    let ex = cesaro_to_density_zero(&a, &levels)?;
    let bound = a.iter().copied().fold(0.0, f64::max);
    // tightest certificate over the extraction cuts
    let mut best = None;
    for &cut in &ex.cuts {
        let c = density_zero_to_cesaro(&a, &ex.set, bound, cut)?;
        if best.as_ref().map_or(true, |b: &crate::density::CesaroCertificate| c.final_certificate() < b.final_certificate()) {
            best = Some(c);
        }
    }
    let cert = best.expect("cuts start at 0");
    let doubled = cesaro_to_density_zero(&seq.values(2 * horizon), &levels)?;
    let ratio = if ex.density > 0.0 { doubled.density / ex.density } else { 0.0 };
    let mut pass = cert.final_actual() <= cert.final_certificate();
    if let Some(tol) = p.halving_tolerance {
        pass &= (ratio - 0.5).abs() <= tol * 0.5;
    }
    let rows = cert
        .actual
        .iter()
        .zip(&cert.certificates)
        .enumerate()
        .map(|(n, (m, c))| vec![(n + 1).to_string(), fmt(*m), fmt(*c)]);
    let series = vec![("cesaro".into(), csv_string(&["n", "cesaro_mean", "certificate"], rows)?)];
    let result = serde_json::json!({
        "levels": ex.levels,
        "cuts": ex.cuts,
        "density": ex.density,
        "exceptional_count": ex.set.len(),
        "complement_max": ex.tail_sups[0],
        "certificate_cut": cert.cut,
        "final_certificate": cert.final_certificate(),
        "final_actual": cert.final_actual(),
        "doubled_density": doubled.density,
        "doubling_ratio": ratio,
    });
    Ok(Run { pass, key: key("final_certificate", cert.final_certificate())?, result, series })
}

fn run_product(s: &Scenario, seed: u64) -> Result<Run> {
    let FamilyDescriptor::Product { left, right } = &s.family else {
        return Err(invalid("family", "a product experiment needs a product descriptor"));
    };
    let (f, g) = (left.build()?, right.build()?);
    let p = &s.params;
    let defaults = CheckConfig::default();
    let cfg = CheckConfig {
        eps: p.epsilon.unwrap_or(defaults.eps),
        delta: p.delta.unwrap_or(defaults.delta),
        max_len: p.max_len.unwrap_or(defaults.max_len),
        budget: p.budget.unwrap_or(defaults.budget),
        seed,
        ..defaults
    };
    let variants = p.variants.clone().unwrap_or_else(|| vec![ShadowingVariant::H, ShadowingVariant::SLimit]);
    let mut records = Vec::with_capacity(variants.len());
    for v in variants {
        records.push(product_equivalence_check(&f, &g, v, &cfg, cfg.delta, p.delta_right.unwrap_or(cfg.delta))?);
    }
    let consistent = records.iter().all(|r| r.consistent);
    let rows = records.iter().map(|r| {
        vec![r.variant.tag().to_string(), r.factor_f.pass.to_string(), r.factor_g.pass.to_string(), r.product.pass.to_string(), r.consistent.to_string()]
    });
    let series = vec![("equivalence".into(), csv_string(&["variant", "f", "g", "product", "consistent"], rows)?)];
    let result = serde_json::json!({ "config": cfg, "records": records });
    Ok(Run { pass: consistent, key: key("consistent", consistent)?, result, series })
}

fn default_horizon(e: Experiment) -> usize {
    match e {
        Experiment::Shadow => 64,
        Experiment::Periodic => 16,
        Experiment::Product => 0,
        Experiment::Limit | Experiment::Average | Experiment::Density => 10_000,
    }
}

fn dispatch(s: &Scenario, seed: u64, horizon: usize) -> Result<(String, Run)> {
    let family = s.family.build()?;
    let label = family.label.clone();
    let run = match s.experiment {
        Experiment::Shadow => run_shadow(&family, &s.params, seed, horizon)?,
        Experiment::Periodic => run_periodic(&family, &s.params, horizon)?,
        Experiment::Limit => run_limit(&family, &s.params, seed, horizon)?,
        Experiment::Average => run_average(family, &s.params, horizon)?,
        Experiment::Density => run_density(&s.params, horizon)?,
        Experiment::Product => run_product(s, seed)?,
    };
    Ok((label, run))
}

/// Runs a validated scenario. Operation errors become failing reports;
/// only configuration errors are returned as `Err`.
pub fn run_scenario(s: &Scenario, overrides: Overrides) -> Result<Outcome> {
    validate(s)?;
    let seed = overrides.seed.or(s.params.seed).unwrap_or(0);
    let horizon = overrides.horizon.or(s.params.horizon).unwrap_or_else(|| default_horizon(s.experiment));
    let mut report = Report {
        scenario: s.name.clone(),
        experiment: s.experiment,
        family: String::new(),
        seed,
        horizon,
        pass: false,
        expect_fail: s.expect_fail,
        key: None,
        error: None,
        result: None,
    };
    match dispatch(s, seed, horizon) {
        Ok((label, run)) => {
            report.family = label;
            report.pass = run.pass;
            report.key = Some(run.key);
            report.result = Some(run.result);
            Ok(Outcome { report, series: run.series })
        }
        Err(e @ ShadowError::ConfigInvalid { .. }) => Err(e),
        Err(e) => {
            report.family = s.family.build().map(|f| f.label).unwrap_or_default();
            report.error = Some(ErrorSummary { name: e.name().into(), message: e.to_string() });
            Ok(Outcome { report, series: Vec::new() })
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| ShadowError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| ShadowError::Io(format!("{}: {e}", path.display())))
}

pub fn report_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}.report.json"))
}

/// Writes `<name>.report.json`, `<name>.meta.json` and `<name>.<series>.csv`.
pub fn write_outcome(out: &Path, outcome: &Outcome, meta: &Meta) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| ShadowError::Io(format!("{}: {e}", out.display())))?;
    let name = &outcome.report.scenario;
    let mut json = serde_json::to_vec_pretty(&outcome.report).map_err(|e| ShadowError::Io(e.to_string()))?;
    json.push(b'\n');
    write_atomic(&report_path(out, name), &json)?;
    for (suffix, body) in &outcome.series {
        write_atomic(&out.join(format!("{name}.{suffix}.csv")), body.as_bytes())?;
    }
    let mut meta_json = serde_json::to_vec_pretty(meta).map_err(|e| ShadowError::Io(e.to_string()))?;
    meta_json.push(b'\n');
    write_atomic(&out.join(format!("{name}.meta.json")), &meta_json)
}

/// Loads, runs and writes one scenario, returning the outcome and runtime.
pub fn execute(path: &Path, overrides: Overrides, out: &Path) -> Result<(Outcome, f64)> {
    let scenario = load_scenario(path)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let clock = Instant::now();
    let outcome = run_scenario(&scenario, overrides)?;
    let runtime_ms = clock.elapsed().as_secs_f64() * 1e3;
    write_outcome(out, &outcome, &Meta { scenario: scenario.name.clone(), started_unix_ms: started, runtime_ms })?;
    Ok((outcome, runtime_ms))
}

pub fn exit_code(err: &ShadowError) -> i32 {
    match err {
        ShadowError::ConfigInvalid { .. } => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub name: String,
    pub verdict: String,
    pub key: String,
    pub runtime_ms: f64,
    pub ok: bool,
}

fn key_text(report: &Report) -> String {
    match (&report.key, &report.error) {
        (_, Some(e)) => format!("error={}", e.name),
        (Some(k), None) => format!("{}={}", k.name, k.value),
        (None, None) => String::new(),
    }
}

/// Scenario files of `dir`, sorted by name.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| invalid(&dir.display().to_string(), e.to_string()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every scenario of `dir`. A configuration error in any file aborts.
pub fn run_suite(dir: &Path, overrides: Overrides, out: &Path) -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for file in scenario_files(dir)? {
        let (outcome, runtime_ms) = execute(&file, overrides, out)?;
        let r = &outcome.report;
        let verdict = match (r.pass, r.expect_fail) {
            (true, false) => "pass",
            (false, false) => "FAIL",
            (false, true) => "expected-fail",
            (true, true) => "UNEXPECTED-PASS",
        };
        rows.push(SuiteRow { name: r.scenario.clone(), verdict: verdict.into(), key: key_text(r), runtime_ms, ok: r.as_expected() });
    }
    Ok(rows)
}

pub fn format_table(rows: &[SuiteRow]) -> String {
    let mut out = format!("{:<32} {:<16} {:<40} {:>12}\n", "scenario", "verdict", "key certificate", "runtime_ms");
    for r in rows {
        out.push_str(&format!("{:<32} {:<16} {:<40} {:>12.3}\n", r.name, r.verdict, r.key, r.runtime_ms));
    }
    out
}

#[derive(Debug, Parser)]
#[command(name = "shadowkit", version, about = "Run shadowing experiments from JSON scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the scenario horizon.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Output directory for reports and series.
    #[arg(long, global = true, default_value = "shadowkit-out")]
    pub out: PathBuf,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario file.
    Run { file: PathBuf },
    /// Run every scenario in a directory.
    Suite { dir: PathBuf },
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let overrides = Overrides { seed: cli.seed, horizon: cli.horizon };
    match cli.command {
        Command::Run { file } => match execute(&file, overrides, &cli.out) {
            Ok((outcome, _)) => {
                let r = &outcome.report;
                if !cli.quiet {
                    match &r.error {
                        Some(e) => eprintln!("{}: {} ({})", r.scenario, e.name, e.message),
                        None => println!("{}: {} ({})", r.scenario, if r.pass { "pass" } else { "FAIL" }, key_text(r)),
                    }
                }
                i32::from(!r.pass)
            }
            Err(e) => {
                eprintln!("{}: {e}", e.name());
                exit_code(&e)
            }
        },
        Command::Suite { dir } => match run_suite(&dir, overrides, &cli.out) {
            Ok(rows) => {
                if !cli.quiet {
                    print!("{}", format_table(&rows));
                }
                i32::from(rows.iter().any(|r| !r.ok))
            }
            Err(e) => {
                eprintln!("{}: {e}", e.name());
                exit_code(&e)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(json: &str) -> Result<Scenario> {
        parse_scenario(json)
    }

    #[test]
    fn malformed_json_reports_config_invalid() {
        assert!(matches!(scenario("{"), Err(ShadowError::ConfigInvalid { .. })));
        let e = scenario(r#"{"name": "x", "family": {"kind": "doubling"}, "experiment": "shadow", "params": {"epsilon": "big"}}"#)
            .unwrap_err();
        match e {
            ShadowError::ConfigInvalid { path, .. } => assert_eq!(path, "params.epsilon"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_paths() {
        let e = scenario(r#"{"name": "x", "family": {"kind": "doubling"}, "experiment": "shadow", "params": {"margin": 1.5}}"#)
            .unwrap_err();
        assert!(matches!(e, ShadowError::ConfigInvalid { ref path, .. } if path == "params.margin"));
        let e = scenario(r#"{"name": "x", "family": {"kind": "doubling"}, "experiment": "product"}"#).unwrap_err();
        assert!(matches!(e, ShadowError::ConfigInvalid { ref path, .. } if path == "family"));
    }

    #[test]
    fn large_epsilon_is_an_operation_error() {
        let s = scenario(r#"{"name": "x", "family": {"kind": "doubling"}, "experiment": "shadow", "params": {"epsilon": 0.2, "delta": 0.01}}"#)
            .unwrap();
        let o = run_scenario(&s, Overrides::default()).unwrap();
        assert!(!o.report.pass);
        assert_eq!(o.report.error.unwrap().name, "EpsilonTooLarge");
    }

    #[test]
    fn harmonic_defects_are_capped() {
        assert_eq!(DefectSequence::Harmonic { cap: 0.5 }.values(3), vec![0.5, 0.5, 1.0 / 3.0]);
        assert_eq!(DefectSequence::Squares { value: 1.0 }.values(5), vec![1.0, 1.0, 0.0, 0.0, 1.0]);
    }
}
