//! Backward inverse-branch pullbacks for expanding families.
//!
//! A pseudo-orbit `x_0..x_k` is shadowed by pulling the ball `B̄(x_k, ε)`
//! back through the local inverses `f_{j,x_j}^{-1}` and clipping each pullback
//! to `B̄(x_j, ε)`. The shadow point is the backward chain
//! `q_j = f_{j,x_j}^{-1}(q_{j+1})` started at `q_k = x_k`, which lies in every
//! cell; its forward orbit is `q_0, …, q_k` exactly, so errors are read off the
//! chain instead of a forward iteration that would amplify rounding by `∏ 1/λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShadowError};
use crate::family::MapFamily;
use crate::pseudo_orbit::{perturb_orbit, PseudoOrbit};
use crate::space::{Point, StateSpace};

/// Slack allowed when checking that a cell sits inside its ε-ball.
pub const CELL_TOL: f64 = 1e-12;
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const FIXED_POINT_MAX_ITER: usize = 100_000;
pub const DEFAULT_MARGIN: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackCell {
    pub time_index: usize,
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    pub shadow_point: Point,
    pub horizon: usize,
    /// `d(F_n(x), x_n)` for `n = 0..=k`.
    pub per_step_errors: Vec<f64>,
    /// `2ε ∏_{i=1}^k λ_i`.
    pub diameter_bound: f64,
    /// Diameter of the final cell, never above `diameter_bound`.
    pub cell_diameter: f64,
    pub epsilon: f64,
    pub delta_schedule: Vec<f64>,
    pub verdict: bool,
}

impl ShadowReport {
    pub fn max_error(&self) -> f64 {
        self.per_step_errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn errors_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "error"]).map_err(crate::pseudo_orbit::csv_err)?;
        for (n, e) in self.per_step_errors.iter().enumerate() {
            w.write_record([n.to_string(), format!("{e:.17e}")]).map_err(crate::pseudo_orbit::csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| ShadowError::Io(e.to_string()))?)
            .map_err(|e| ShadowError::Io(e.to_string()))
    }
}

/// Cells `Y_k, …, Y_0` (stored from time 0 upwards) and the chain `q_0..q_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackChain {
    pub cells: Vec<PullbackCell>,
    pub chain: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PullbackOptions {
    /// Moves the chain's terminal point `q_k` off `x_k` by this amount
    /// (coordinate-wise on products). Must stay below `ε` in size.
    pub terminal_offset: f64,
}

/// `δ_n = margin · (1 - λ_n) · ε` for each rate in `lambdas`.
pub fn delta_budget(lambdas: &[f64], eps: f64, margin: f64, delta0: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(ShadowError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(ShadowError::InvalidArgument(format!("margin must lie in (0, 1], got {margin}")));
    }
    if eps >= delta0 / 2.0 {
        return Err(ShadowError::EpsilonTooLarge { epsilon: eps, limit: delta0 / 2.0 });
    }
    lambdas
        .iter()
        .map(|&l| {
            if !(l > 0.0 && l < 1.0) {
                return Err(ShadowError::InvalidArgument(format!("contraction rate {l} is outside (0, 1)")));
            }
            let delta = margin * (1.0 - l) * eps;
            Ok(delta)
        })
        .collect()
}

fn branch_radius(family: &MapFamily) -> Result<f64> {
    match family.inverse_branch_radius {
        Some(r) if family.is_expanding() => Ok(r),
        _ => Err(ShadowError::NotExpanding),
    }
}

fn rates(family: &MapFamily, po: &PseudoOrbit) -> Result<Vec<f64>> {
    (0..po.horizon())
        .map(|j| family.rate_at(po.start_index + j)?.ok_or(ShadowError::NotExpanding))
        .collect()
}

/// Schedule `δ_j` for the defect `d(f_j(x_j), x_{j+1})`, using the rate of `f_j`.
pub fn budget_for(family: &MapFamily, po: &PseudoOrbit, eps: f64, margin: f64) -> Result<Vec<f64>> {
    delta_budget(&rates(family, po)?, eps, margin, branch_radius(family)?)
}

fn check_budget(po: &PseudoOrbit, budget: &[f64]) -> Result<()> {
    for (index, (&defect, &b)) in po.defects.iter().zip(budget).enumerate() {
        if defect >= b {
            return Err(ShadowError::DeltaBudgetViolated { index, defect, budget: b });
        }
    }
    Ok(())
}

fn offset_point(space: &StateSpace, p: &Point, amount: f64) -> Result<Point> {
    if amount == 0.0 {
        return Ok(p.clone());
    }
    match (&space.kind, p) {
        (crate::space::SpaceKind::Product { left, right }, Point::Pair(a, b)) => {
            Ok(Point::pair(offset_point(left, a, amount)?, offset_point(right, b, amount)?))
        }
        (_, Point::Real(x)) => Ok(Point::Real(space.shift_real(*x, amount)?)),
        _ => Err(ShadowError::InvalidArgument(format!("cannot offset a point of {}", space.description))),
    }
}

/// Builds the pullback cells and chain without checking the δ budget.
///
/// Only the branch-domain and non-emptiness conditions are enforced, so this
/// also runs on pseudo-orbits outside the budget, where no error bound is promised.
pub fn pullback_chain(family: &MapFamily, po: &PseudoOrbit, eps: f64, options: PullbackOptions) -> Result<PullbackChain> {
    let delta0 = branch_radius(family)?;
    if !(eps > 0.0) {
        return Err(ShadowError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    if options.terminal_offset.abs() >= eps {
        return Err(ShadowError::InvalidArgument("terminal offset must be smaller than epsilon".into()));
    }
    let k = po.horizon();
    let s = po.start_index;
    let mut cells = vec![PullbackCell { time_index: s + k, center: po.points[k].clone(), radius: eps }];
    let mut chain = vec![offset_point(family.space_at(s + k)?, &po.points[k], options.terminal_offset)?];

    for j in (0..k).rev() {
        let n = s + j;
        let xj = &po.points[j];
        let w = family.evaluate(n, xj)?;
        let branch = family.branch_containing(n, xj)?;
        let rate = family.rate_at(n)?.ok_or(ShadowError::NotExpanding)?;
        let target = family.space_at(n + 1)?;
        let space = family.space_at(n)?;

        let cell = cells.last().unwrap();
        if target.distance(&w, &cell.center)? + cell.radius >= delta0 {
            return Err(ShadowError::BranchDomainViolated { index: j });
        }
        let center = family.inverse_branch(n, &w, branch, &cell.center)?;
        let radius = rate * cell.radius;
        let (center, radius) = if space.distance(&center, xj)? + radius <= eps {
            (center, radius)
        } else {
            space.intersect_balls(&center, radius, xj, eps)?.ok_or(ShadowError::EmptyCell { index: j })?
        };
        debug_assert!(space.distance(&center, xj)? + radius <= eps + CELL_TOL);

        let q = chain.last().unwrap();
        if target.distance(&w, q)? >= delta0 {
            return Err(ShadowError::BranchDomainViolated { index: j });
        }
        let q = family.inverse_branch(n, &w, branch, q)?;
        cells.push(PullbackCell { time_index: n, center, radius });
        chain.push(q);
    }
    cells.reverse();
    chain.reverse();
    Ok(PullbackChain { cells, chain })
}

fn report_from_chain(
    family: &MapFamily,
    po: &PseudoOrbit,
    eps: f64,
    chain: &PullbackChain,
    delta_schedule: Vec<f64>,
) -> Result<ShadowReport> {
    let per_step_errors = chain
        .chain
        .iter()
        .zip(&po.points)
        .enumerate()
        .map(|(j, (q, x))| family.space_at(po.start_index + j)?.distance(q, x))
        .collect::<Result<Vec<_>>>()?;
    let product: f64 = rates(family, po)?.iter().product();
    let verdict = per_step_errors.iter().all(|&e| e < eps);
    Ok(ShadowReport {
        shadow_point: chain.chain[0].clone(),
        horizon: po.horizon(),
        per_step_errors,
        diameter_bound: 2.0 * eps * product,
        cell_diameter: 2.0 * chain.cells[0].radius,
        epsilon: eps,
        delta_schedule,
        verdict,
    })
}

/// Shadows `po` after checking every defect against the budget at `margin`.
pub fn pullback_shadow_with(
    family: &MapFamily,
    po: &PseudoOrbit,
    eps: f64,
    margin: f64,
    options: PullbackOptions,
) -> Result<(ShadowReport, PullbackChain)> {
    let budget = budget_for(family, po, eps, margin)?;
    check_budget(po, &budget)?;
    let chain = pullback_chain(family, po, eps, options)?;
    let report = report_from_chain(family, po, eps, &chain, budget)?;
    Ok((report, chain))
}

pub fn pullback_shadow(family: &MapFamily, po: &PseudoOrbit, eps: f64) -> Result<(ShadowReport, PullbackChain)> {
    pullback_shadow_with(family, po, eps, DEFAULT_MARGIN, PullbackOptions::default())
}

/// Diameter of the final cell for the first `k` steps of `po`.
pub fn uniqueness_certificate(family: &MapFamily, po: &PseudoOrbit, eps: f64, k: usize) -> Result<f64> {
    let (report, _) = pullback_shadow(family, &po.truncated(k), eps)?;
    Ok(report.cell_diameter)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicShadow {
    pub point: Point,
    pub period: usize,
    /// `d(F_p(x), x)`.
    pub return_gap: f64,
    pub iterations: usize,
    pub per_step_errors: Vec<f64>,
    pub verdict: bool,
}

/// Fixed point of the period-`p` pullback map near a periodic pseudo-orbit.
pub fn periodic_shadow(family: &MapFamily, po: &PseudoOrbit, period: usize, eps: f64) -> Result<PeriodicShadow> {
    if !family.is_constant_space() {
        return Err(ShadowError::NonConstantSpaces);
    }
    if period == 0 || period > po.horizon() {
        return Err(ShadowError::NonPeriodicInput { period });
    }
    let space = family.space_at(po.start_index)?;
    for i in period..po.points.len() {
        if space.distance(&po.points[i], &po.points[i - period])? > CELL_TOL {
            return Err(ShadowError::NonPeriodicInput { period });
        }
    }
    if family.schedule_len().is_some() || !is_periodic_schedule(family, po.start_index, period, po.horizon())? {
        return Err(ShadowError::NonPeriodicInput { period });
    }
    let budget = budget_for(family, po, eps, DEFAULT_MARGIN)?;
    check_budget(po, &budget)?;
    let delta0 = branch_radius(family)?;

    let s = po.start_index;
    let bases = (0..period)
        .map(|j| Ok((family.evaluate(s + j, &po.points[j])?, family.branch_containing(s + j, &po.points[j])?)))
        .collect::<Result<Vec<_>>>()?;
    let pull = |y: &Point| -> Result<Vec<Point>> {
        let mut out = vec![y.clone()];
        for j in (0..period).rev() {
            let (w, b) = &bases[j];
            let q = out.last().unwrap();
            if family.space_at(s + j + 1)?.distance(w, q)? >= delta0 {
                return Err(ShadowError::BranchDomainViolated { index: j });
            }
            out.push(family.inverse_branch(s + j, w, *b, q)?);
        }
        out.reverse();
        Ok(out)
    };

    let mut y = po.points[0].clone();
    let mut iterations = 0;
    let (point, segment, gap) = loop {
        iterations += 1;
        let segment = pull(&y)?;
        let next = segment[0].clone();
        let gap = space.distance(&next, &y)?;
        if gap < FIXED_POINT_TOL || iterations >= FIXED_POINT_MAX_ITER {
            break (next, segment, gap);
        }
        y = next;
    };
    if gap >= FIXED_POINT_TOL {
        return Err(ShadowError::NoConvergence { gap });
    }
    let per_step_errors = (0..po.points.len())
        .map(|i| space.distance(&segment[i % period], &po.points[i]))
        .collect::<Result<Vec<_>>>()?;
    let verdict = per_step_errors.iter().all(|&e| e < eps);
    Ok(PeriodicShadow { point, period, return_gap: gap, iterations, per_step_errors, verdict })
}

fn is_periodic_schedule(family: &MapFamily, start: usize, period: usize, horizon: usize) -> Result<bool> {
    for n in start + period..start + horizon {
        if family.map_at(n)? != family.map_at(n - period)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzTrial {
    pub x0: Point,
    pub horizon: usize,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `1 / (1 - sup λ)`.
    pub certificate: f64,
    /// `max error / δ` per trial.
    pub ratios: Vec<f64>,
    pub estimate: f64,
}

/// Runs each trial at the smallest `ε` whose budget admits its noise level and
/// compares the error-to-noise ratio with `1/(1 - sup λ)`.
pub fn lipschitz_report(family: &MapFamily, trials: &[LipschitzTrial]) -> Result<LipschitzReport> {
    let sup = family.sup_rate()?;
    if sup >= 1.0 {
        return Err(ShadowError::SupRateNotBounded { sup });
    }
    let delta0 = branch_radius(family)?;
    let certificate = 1.0 / (1.0 - sup);
    let mut ratios = Vec::with_capacity(trials.len());
    for t in trials {
        let po = perturb_orbit(family, &t.x0, t.horizon, t.delta, t.seed)?;
        let eps = (t.delta / (DEFAULT_MARGIN * (1.0 - sup))).max(f64::MIN_POSITIVE);
        if eps >= delta0 / 2.0 {
            return Err(ShadowError::EpsilonTooLarge { epsilon: eps, limit: delta0 / 2.0 });
        }
        let (report, _) = pullback_shadow(family, &po, eps)?;
        let ratio = if t.delta > 0.0 { report.max_error() / t.delta } else { 0.0 };
        if ratio > certificate * (1.0 + 1e-9) {
            return Err(ShadowError::HypothesisFailed(format!("ratio {ratio} exceeds the certificate {certificate}")));
        }
        ratios.push(ratio);
    }
    let estimate = ratios.iter().copied().fold(0.0, f64::max);
    Ok(LipschitzReport { certificate, ratios, estimate })
}
