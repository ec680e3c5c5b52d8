//! Limit shadowing by splicing exact preimage heads onto the tails of a limit
//! pseudo-orbit, shadowing each spliced orbit and passing to the limit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShadowError};
use crate::family::MapFamily;
use crate::pseudo_orbit::{random_displace, seeded, PseudoOrbit};
use crate::solver::{self, PullbackOptions, DEFAULT_MARGIN};
use crate::space::{Point, SpaceKind, StateSpace};

pub const LADDER_RUNGS: usize = 16;
/// Consecutive level shadows closer than this are accepted as the limit.
pub const CAUCHY_TOL: f64 = 1e-9;
pub const SPLICE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub epsilon: f64,
    /// Largest passing rung `ε·2^{-r}`. An estimate, not a certificate.
    pub delta: f64,
    pub rung: usize,
    pub pairs_tested: usize,
    pub horizon: usize,
}

fn random_point(space: &StateSpace, rng: &mut ChaCha8Rng) -> Point {
    match &space.kind {
        SpaceKind::Circle | SpaceKind::Interval => Point::Real(rng.gen::<f64>()),
        SpaceKind::Finite { distances } => Point::state(rng.gen_range(0..distances.len())),
        SpaceKind::Product { left, right } => Point::pair(random_point(left, rng), random_point(right, rng)),
    }
}

fn sample_pairs(space: &StateSpace, delta: f64, samples: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(Point, Point)>> {
    if let Some(points) = space.enumerate() {
        let mut pairs = Vec::new();
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if space.distance(a, b)? < delta {
                    pairs.push((a.clone(), b.clone()));
                }
            }
        }
        return Ok(pairs);
    }
    (0..samples)
        .map(|_| {
            let a = random_point(space, rng);
            let b = random_displace(space, &a, delta, rng)?;
            Ok((a, b))
        })
        .collect()
}

fn stays_close(family: &MapFamily, a: &Point, b: &Point, start: usize, horizon: usize, eps: f64) -> Result<bool> {
    let steps = horizon - start;
    let oa = family.orbit_from(start, a, steps)?;
    let ob = family.orbit_from(start, b, steps)?;
    for (i, (p, q)) in oa.points.iter().zip(&ob.points).enumerate() {
        if family.space_at(start + i)?.distance(p, q)? >= eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Empirical modulus of strong equicontinuity up to `horizon`: the largest
/// rung `δ = ε·2^{-r}` such that every sampled pair with `d(x, y) < δ` stays
/// `ε`-close under every `f_m^n`, `m ≤ n ≤ horizon`.
pub fn equicontinuity_modulus(
    family: &MapFamily,
    eps: f64,
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<ModulusEstimate> {
    if !(eps > 0.0) {
        return Err(ShadowError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let mut rng = seeded(seed);
    let mut pairs_tested = 0;
    for rung in 0..LADDER_RUNGS {
        let delta = eps * 0.5f64.powi(rung as i32);
        let mut ok = true;
        'starts: for m in 0..horizon {
            let space = family.space_at(m)?;
            for (a, b) in sample_pairs(space, delta, samples, &mut rng)? {
                pairs_tested += 1;
                if !stays_close(family, &a, &b, m, horizon, eps)? {
                    ok = false;
                    break 'starts;
                }
            }
        }
        if ok {
            return Ok(ModulusEstimate { epsilon: eps, delta, rung, pairs_tested, horizon });
        }
    }
    Err(ShadowError::NotEquicontinuousAtHorizon { epsilon: eps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplicedOrbit {
    pub level: usize,
    pub cut: usize,
    /// `x_{n0}, …, x_{n(k_n-1)}`, an exact orbit segment landing on `x_{k_n}`.
    pub head: Vec<Point>,
    pub orbit: PseudoOrbit,
}

impl SplicedOrbit {
    /// Head defects vanish (within [`SPLICE_TOL`]) and tail defects equal the
    /// original ones.
    pub fn verify(&self, original: &PseudoOrbit) -> bool {
        let k = self.cut;
        self.orbit.defects[..k].iter().all(|&d| d <= SPLICE_TOL) && self.orbit.defects[k..] == original.defects[k..]
    }
}

/// Replaces `x_0..x_{cut-1}` by preimages chosen backward from `x_cut`, each
/// the preimage closest to the original point (lower branch id on ties).
pub fn splice(family: &MapFamily, po: &PseudoOrbit, cut: usize, level: usize) -> Result<SplicedOrbit> {
    if cut > po.horizon() {
        return Err(ShadowError::InvalidArgument(format!("cut {cut} is past the horizon {}", po.horizon())));
    }
    let s = po.start_index;
    let mut head = Vec::with_capacity(cut);
    let mut target = po.points[cut].clone();
    for i in (0..cut).rev() {
        let pre = family.preimages(s + i, &target)?;
        let space = family.space_at(s + i)?;
        let (_, p, _) = space.nearest(&po.points[i], &pre)?.ok_or(ShadowError::PreimageSearchFailed { index: i })?;
        target = p.clone();
        head.push(target.clone());
    }
    head.reverse();
    let points = head.iter().cloned().chain(po.points[cut..].iter().cloned()).collect();
    let orbit = PseudoOrbit::new(family, s, points)?;
    Ok(SplicedOrbit { level, cut, head, orbit })
}

/// Shadowing as a black box: a modulus `δ(ε)` and a way to produce a true
/// orbit `ε`-shadowing any `δ(ε)`-pseudo-orbit.
pub trait ShadowOracle {
    fn name(&self) -> &'static str;
    fn modulus(&self, family: &MapFamily, eps: f64, horizon: usize) -> Result<f64>;
    /// A true orbit `y, F_1(y), …` over the horizon of `po`.
    fn shadow(&self, family: &MapFamily, po: &PseudoOrbit, eps: f64) -> Result<Vec<Point>>;
}

/// Isometric families: the orbit through `x_K` at the horizon.
#[derive(Debug, Clone, Copy, Default)]
pub struct IsometryTransport;

impl ShadowOracle for IsometryTransport {
    fn name(&self) -> &'static str {
        "isometry-transport"
    }

    fn modulus(&self, _family: &MapFamily, eps: f64, _horizon: usize) -> Result<f64> {
        Ok(eps / 2.0)
    }

    fn shadow(&self, family: &MapFamily, po: &PseudoOrbit, _eps: f64) -> Result<Vec<Point>> {
        let k = po.horizon();
        let s = po.start_index;
        let mut target = po.points[k].clone();
        for i in (0..k).rev() {
            let pre = family.preimages(s + i, &target)?;
            let space = family.space_at(s + i)?;
            let (_, p, _) = space.nearest(&po.points[i], &pre)?.ok_or(ShadowError::PreimageSearchFailed { index: i })?;
            target = p.clone();
        }
        Ok(family.orbit_from(s, &target, k)?.points)
    }
}

/// Finite state spaces: every start is tried and the smallest sup error wins
/// (earliest state on ties).
#[derive(Debug, Clone, Copy, Default)]
pub struct FiniteExhaustive;

impl ShadowOracle for FiniteExhaustive {
    fn name(&self) -> &'static str {
        "finite-exhaustive"
    }

    fn modulus(&self, family: &MapFamily, _eps: f64, horizon: usize) -> Result<f64> {
        let mut delta = f64::INFINITY;
        for n in 0..=horizon {
            let space = family.space_at(n)?;
            let d = space.min_positive_distance().ok_or_else(|| ShadowError::OracleUnavailable(space.description.clone()))?;
            delta = delta.min(d);
        }
        Ok(delta)
    }

    fn shadow(&self, family: &MapFamily, po: &PseudoOrbit, _eps: f64) -> Result<Vec<Point>> {
        let s = po.start_index;
        let space = family.space_at(s)?;
        let starts = space.enumerate().ok_or_else(|| ShadowError::OracleUnavailable(space.description.clone()))?;
        let mut best: Option<(f64, Vec<Point>)> = None;
        for y in starts {
            let orbit = family.orbit_from(s, &y, po.horizon())?.points;
            let mut sup = 0.0f64;
            for (i, (p, x)) in orbit.iter().zip(&po.points).enumerate() {
                sup = sup.max(family.space_at(s + i)?.distance(p, x)?);
            }
            if best.as_ref().map_or(true, |(b, _)| sup < *b) {
                best = Some((sup, orbit));
            }
        }
        best.map(|(_, o)| o).ok_or(ShadowError::EmptyA)
    }
}

/// Expanding families: the pullback solver, with `ε` capped below `δ₀/2`.
#[derive(Debug, Clone, Copy)]
pub struct ExpandingSolver {
    pub margin: f64,
}

impl Default for ExpandingSolver {
    fn default() -> Self {
        Self { margin: DEFAULT_MARGIN }
    }
}

impl ExpandingSolver {
    fn working_eps(family: &MapFamily, eps: f64) -> Result<f64> {
        let delta0 = family.inverse_branch_radius.ok_or(ShadowError::NotExpanding)?;
        Ok(eps.min(0.4 * delta0))
    }
}

impl ShadowOracle for ExpandingSolver {
    fn name(&self) -> &'static str {
        "expanding-solver"
    }

    fn modulus(&self, family: &MapFamily, eps: f64, horizon: usize) -> Result<f64> {
        let eps = Self::working_eps(family, eps)?;
        let lambdas = (0..horizon.max(1))
            .map(|n| family.rate_at(n)?.ok_or(ShadowError::NotExpanding))
            .collect::<Result<Vec<_>>>()?;
        let delta0 = family.inverse_branch_radius.ok_or(ShadowError::NotExpanding)?;
        let budget = solver::delta_budget(&lambdas, eps, self.margin, delta0)?;
        Ok(budget.into_iter().fold(f64::INFINITY, f64::min))
    }

    fn shadow(&self, family: &MapFamily, po: &PseudoOrbit, eps: f64) -> Result<Vec<Point>> {
        let eps = Self::working_eps(family, eps)?;
        let (_, chain) = solver::pullback_shadow_with(family, po, eps, self.margin, PullbackOptions::default())?;
        Ok(chain.chain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    /// `ε_n = eps_scale / n`.
    pub eps_scale: f64,
    pub levels: usize,
    /// Samples per rung for the equicontinuity gate.
    pub samples: usize,
    /// Horizon of the equicontinuity gate.
    pub gate_horizon: usize,
    pub seed: u64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self { eps_scale: 1.0, levels: 8, samples: 64, gate_horizon: 32, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub cut: usize,
    /// `sup_i d(F_i(y_n), z_i)` against the spliced orbit `z`.
    pub spliced_error: f64,
    /// `d(y_n, y_{n-1})`.
    pub gap: Option<f64>,
    /// `max_{i ∈ [k_n, 2k_n]} d(F_i(y), x_i)` for the accepted `y`.
    pub window_error: f64,
    /// `max_{i ∈ [k_n, 2k_n]}` of `d(F_i(y), F_i(y_n))` and `d(F_i(y_n), x_i)`.
    pub triangle: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub oracle: String,
    pub point: Point,
    pub accepted_level: usize,
    pub table: Vec<LevelRow>,
    pub modulus: Option<ModulusEstimate>,
    /// Window errors are nonincreasing across levels.
    pub monotone: bool,
}

impl LimitReport {
    pub fn final_window_error(&self) -> f64 {
        self.table.last().map_or(0.0, |r| r.window_error)
    }

    pub fn table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = crate::pseudo_orbit::csv_err;
        w.write_record(["level", "epsilon", "delta", "cut", "spliced_error", "gap", "window_error"]).map_err(err)?;
        for r in &self.table {
            w.write_record([
                r.level.to_string(),
                format!("{:.17e}", r.epsilon),
                format!("{:.17e}", r.delta),
                r.cut.to_string(),
                format!("{:.17e}", r.spliced_error),
                r.gap.map(|g| format!("{g:.17e}")).unwrap_or_default(),
                format!("{:.17e}", r.window_error),
            ])
            .map_err(err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| ShadowError::Io(e.to_string()))?)
            .map_err(|e| ShadowError::Io(e.to_string()))
    }
}

fn sup_distance(family: &MapFamily, start: usize, a: &[Point], b: &[Point], range: std::ops::Range<usize>) -> Result<f64> {
    let mut sup = 0.0f64;
    for i in range {
        sup = sup.max(family.space_at(start + i)?.distance(&a[i], &b[i])?);
    }
    Ok(sup)
}

/// Limit shadowing after checking the equicontinuity gate at `ε_1`.
pub fn limit_shadow_point(
    family: &MapFamily,
    po: &PseudoOrbit,
    oracle: &dyn ShadowOracle,
    config: &LimitConfig,
) -> Result<LimitReport> {
    let modulus = equicontinuity_modulus(family, config.eps_scale, config.samples, config.gate_horizon, config.seed)?;
    let mut report = limit_shadow_ungated(family, po, oracle, config)?;
    report.modulus = Some(modulus);
    Ok(report)
}

/// The splice-shadow-limit construction without the equicontinuity gate.
/// Used where shadowing is available by other means (expanding families).
pub fn limit_shadow_ungated(
    family: &MapFamily,
    po: &PseudoOrbit,
    oracle: &dyn ShadowOracle,
    config: &LimitConfig,
) -> Result<LimitReport> {
    if config.levels == 0 {
        return Err(ShadowError::InvalidArgument("at least one level is required".into()));
    }
    let k = po.horizon();
    let s = po.start_index;
    let tail = crate::pseudo_orbit::defect_profile(&po.defects).tail_sup;

    let mut rows = Vec::with_capacity(config.levels);
    let mut shadows: Vec<Vec<Point>> = Vec::with_capacity(config.levels);
    let mut prev_cut = 0;
    for n in 1..=config.levels {
        let eps = config.eps_scale / n as f64;
        let delta = oracle.modulus(family, eps, k)?;
        let cut = (prev_cut..=k)
            .find(|&c| c == k || tail[c] < delta)
            .ok_or_else(|| ShadowError::HypothesisFailed(format!("defects never fall below {delta}")))?;
        if cut == k && k > 0 && tail[k - 1] >= delta {
            return Err(ShadowError::HypothesisFailed(format!(
                "defects do not fall below δ_{n} = {delta} before the horizon {k}"
            )));
        }
        prev_cut = cut;
        let spliced = splice(family, po, cut, n)?;
        let orbit = oracle.shadow(family, &spliced.orbit, eps)?;
        let spliced_error = sup_distance(family, s, &orbit, &spliced.orbit.points, 0..k + 1)?;
        if spliced_error >= eps {
            return Err(ShadowError::HypothesisFailed(format!(
                "oracle {} missed ε_{n} = {eps} (error {spliced_error})",
                oracle.name()
            )));
        }
        let gap = shadows.last().map(|p: &Vec<Point>| family.space_at(s)?.distance(&p[0], &orbit[0])).transpose()?;
        rows.push(LevelRow { level: n, epsilon: eps, delta, cut, spliced_error, gap, window_error: 0.0, triangle: (0.0, 0.0) });
        shadows.push(orbit);
    }

    let accepted = if config.levels == 1 {
        Some(0)
    } else {
        (1..rows.len()).rev().find(|&i| rows[i].gap.is_some_and(|g| g < CAUCHY_TOL))
    };
    let Some(accepted) = accepted else {
        return Err(ShadowError::NoConvergence { gap: rows.last().and_then(|r| r.gap).unwrap_or(f64::NAN) });
    };
    let y = shadows[accepted].clone();
    for (row, yn) in rows.iter_mut().zip(&shadows) {
        let window = row.cut..(2 * row.cut).min(k) + 1;
        row.window_error = sup_distance(family, s, &y, &po.points, window.clone())?;
        row.triangle = (
            sup_distance(family, s, &y, yn, window.clone())?,
            sup_distance(family, s, yn, &po.points, window)?,
        );
    }
    let monotone = rows.windows(2).all(|w| w[1].window_error <= w[0].window_error);
    Ok(LimitReport {
        oracle: oracle.name().into(),
        point: y[0].clone(),
        accepted_level: accepted + 1,
        table: rows,
        modulus: None,
        monotone,
    })
}
