//! Shadowing-variant checkers and the product equivalence check.
//!
//! Finite-state families are decided by enumerating every δ-pseudo-orbit up
//! to a short length together with every candidate shadow point. Continuous
//! families are sampled and routed to the pullback solver (expanding maps) or
//! to transport along preimages (isometries); there a failed search is
//! reported as a failure of the search, not a proof of absence.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShadowError};
use crate::family::MapFamily;
use crate::finite::FiniteView;
use crate::limit::{self, ExpandingSolver, IsometryTransport, LimitConfig, ShadowOracle};
use crate::pseudo_orbit::{inject_defects, perturb_orbit, periodicize, seeded, Displacement, PseudoOrbit};
use crate::solver::{self, LipschitzTrial, PullbackOptions};
use crate::space::Point;

pub const MAX_ENUMERATION_LEN: usize = 6;
pub const MAX_CONTINUOUS_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowingVariant {
    /// Some `y` with `d(F_i y, x_i) < ε` for `i ≤ n`.
    Plain,
    /// As plain, with exact landing `F_n(y) = x_n`.
    H,
    /// Plain shadowing of every δ-pseudo-orbit, and limit shadowing of the
    /// ones with exact tails by a point that also ε-shadows.
    SLimit,
    /// Every δ-pseudo-orbit with an exact tail is eventually traced exactly.
    Limit,
    /// Sequences of length `L` with mean defect `< δ` admit `y` with mean
    /// error `< ε`.
    Average,
    /// Sequences exact from step `⌈L/2⌉` on (any earlier defects) admit `y`
    /// that follows the exact tail.
    AsymptoticAverage,
    /// Closed δ-pseudo-orbits `x_p = x_0` are ε-shadowed by `y = F_p(y)`.
    Periodic,
    /// Every δ'-pseudo-orbit, `δ' ≤ δ`, is `(ε/δ)·δ'`-shadowed.
    Lipschitz,
}

impl ShadowingVariant {
    pub const ALL: [ShadowingVariant; 8] = [
        Self::Plain,
        Self::H,
        Self::SLimit,
        Self::Limit,
        Self::Average,
        Self::AsymptoticAverage,
        Self::Periodic,
        Self::Lipschitz,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::H => "h",
            Self::SLimit => "s_limit",
            Self::Limit => "limit",
            Self::Average => "average",
            Self::AsymptoticAverage => "asymptotic_average",
            Self::Periodic => "periodic",
            Self::Lipschitz => "lipschitz",
        }
    }

    /// Equivalence is proven for this variant rather than only checked empirically.
    pub fn theorem_backed(&self) -> bool {
        matches!(self, Self::H | Self::SLimit)
    }
}

impl fmt::Display for ShadowingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub eps: f64,
    pub delta: f64,
    /// Longest enumerated pseudo-orbit (number of steps), at most 6.
    pub max_len: usize,
    /// Maximum number of enumerated pseudo-orbits.
    pub budget: usize,
    /// Sampled pseudo-orbits for continuous families.
    pub trials: usize,
    /// Horizon of the limit pseudo-orbit used for continuous s-limit checks.
    pub horizon: usize,
    pub levels: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { eps: 0.1, delta: 0.049, max_len: 6, budget: 5_000_000, trials: 32, horizon: 256, levels: 6, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub variant: ShadowingVariant,
    pub pass: bool,
    pub checked: usize,
    pub witness: Option<Vec<Point>>,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Plain,
    H,
    Limit,
    Lipschitz { factor: f64 },
    Periodic,
    Average,
    AsymptoticAverage,
}

struct Enumerator<'a> {
    view: &'a FiniteView,
    mode: Mode,
    eps: f64,
    delta: f64,
    len: usize,
    budget: usize,
    checked: usize,
    path: Vec<usize>,
    /// Per depth: `F_j(y)` for every start `y`.
    pos: Vec<Vec<usize>>,
    /// Per depth: `max_{i ≤ j} d(F_i y, x_i)`.
    sup: Vec<Vec<f64>>,
    /// Per depth: `Σ_{i ≤ j} d(F_i y, x_i)`.
    sum: Vec<Vec<f64>>,
}

impl<'a> Enumerator<'a> {
    fn new(view: &'a FiniteView, mode: Mode, eps: f64, delta: f64, len: usize, budget: usize) -> Self {
        let depth = len + 1;
        let m = view.len();
        Self {
            view,
            mode,
            eps,
            delta,
            len,
            budget,
            checked: 0,
            path: Vec::with_capacity(depth),
            pos: vec![vec![0; m]; depth],
            sup: vec![vec![0.0; m]; depth],
            sum: vec![vec![0.0; m]; depth],
        }
    }

    fn run(&mut self) -> Result<Option<Vec<usize>>> {
        for x0 in 0..self.view.len() {
            for y in 0..self.view.len() {
                self.pos[0][y] = y;
                let d = self.view.dist[y][x0];
                self.sup[0][y] = d;
                self.sum[0][y] = d;
            }
            self.path.clear();
            self.path.push(x0);
            if let Some(w) = self.visit(0, 0.0, 0.0)? {
                return Ok(Some(w));
            }
        }
        Ok(None)
    }

    fn periodic_tables(&self, p: usize) -> bool {
        (p..self.view.steps()).all(|t| self.view.tables[t] == self.view.tables[t % p])
    }

    /// Verdict at the node whose path ends at depth `n`.
    fn holds(&self, n: usize, max_defect: f64) -> Option<bool> {
        let xn = self.path[n];
        let m = self.view.len();
        let pos = &self.pos[n];
        let sup = &self.sup[n];
        match self.mode {
            Mode::Plain => Some((0..m).any(|y| sup[y] < self.eps)),
            Mode::H => Some((0..m).any(|y| pos[y] == xn && sup[y] < self.eps)),
            Mode::Limit => Some((0..m).any(|y| pos[y] == xn)),
            Mode::Lipschitz { factor } => Some((0..m).any(|y| sup[y] <= factor * max_defect)),
            Mode::Periodic => (n >= 1 && xn == self.path[0] && self.periodic_tables(n)).then(|| {
                // sup over i < n; the closing point repeats x_0
                (0..m).any(|y| pos[y] == y && self.sup[n - 1][y] < self.eps)
            }),
            Mode::Average => (n == self.len).then(|| (0..m).any(|y| self.sum[n][y] / ((n + 1) as f64) < self.eps)),
            Mode::AsymptoticAverage => (n == self.len.div_ceil(2)).then(|| (0..m).any(|y| pos[y] == xn)),
        }
    }

    fn visit(&mut self, n: usize, max_defect: f64, defect_sum: f64) -> Result<Option<Vec<usize>>> {
        self.checked += 1;
        if self.checked > self.budget {
            return Err(ShadowError::BudgetExceeded { budget: self.budget });
        }
        if self.holds(n, max_defect) == Some(false) {
            return Ok(Some(self.path.clone()));
        }
        let stop = match self.mode {
            Mode::AsymptoticAverage => self.len.div_ceil(2),
            _ => self.len,
        };
        if n == stop {
            return Ok(None);
        }
        let xn = self.path[n];
        let image = self.view.tables[n][xn];
        let m = self.view.len();
        for next in 0..m {
            let defect = self.view.dist[image][next];
            let admissible = match self.mode {
                Mode::Average => defect_sum + defect < self.delta * self.len as f64,
                Mode::AsymptoticAverage => true,
                _ => defect < self.delta,
            };
            if !admissible {
                continue;
            }
            let (lo, hi) = self.pos.split_at_mut(n + 1);
            let (slo, shi) = self.sup.split_at_mut(n + 1);
            let (sumlo, sumhi) = self.sum.split_at_mut(n + 1);
            for y in 0..m {
                let p = self.view.tables[n][lo[n][y]];
                hi[0][y] = p;
                let d = self.view.dist[p][next];
                shi[0][y] = slo[n][y].max(d);
                sumhi[0][y] = sumlo[n][y] + d;
            }
            self.path.push(next);
            let found = self.visit(n + 1, max_defect.max(defect), defect_sum + defect)?;
            self.path.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

fn enumerate_check(family: &MapFamily, variant: ShadowingVariant, mode: Mode, cfg: &CheckConfig) -> Result<Verdict> {
    if cfg.max_len == 0 || cfg.max_len > MAX_ENUMERATION_LEN {
        return Err(ShadowError::InvalidArgument(format!(
            "enumeration length {} must lie in 1..={MAX_ENUMERATION_LEN}",
            cfg.max_len
        )));
    }
    let view = FiniteView::new(family, cfg.max_len)?;
    let mut e = Enumerator::new(&view, mode, cfg.eps, cfg.delta, cfg.max_len, cfg.budget);
    let witness = e.run()?;
    Ok(Verdict {
        variant,
        pass: witness.is_none(),
        checked: e.checked,
        witness: witness.map(|w| view.points(&w)),
        note: format!("exhaustive over pseudo-orbits of length ≤ {}", cfg.max_len),
    })
}

fn is_finite_family(family: &MapFamily) -> bool {
    family.is_constant_space() && family.space_at(0).is_ok_and(|s| s.is_finite())
}

fn random_start(family: &MapFamily, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Point> {
    use rand::Rng;
    let space = family.space_at(0)?;
    let p = Point::Real(rng.gen::<f64>());
    match &space.kind {
        crate::space::SpaceKind::Product { .. } => Ok(Point::pair(Point::Real(rng.gen::<f64>()), p)),
        _ => Ok(p),
    }
}

/// A true orbit ending exactly at `x_n`, or the error that stopped the search.
fn landing_orbit(family: &MapFamily, po: &PseudoOrbit, eps: f64) -> Result<Vec<Point>> {
    if family.is_expanding() {
        Ok(solver::pullback_chain(family, po, eps, PullbackOptions::default())?.chain)
    } else {
        IsometryTransport.shadow(family, po, eps)
    }
}

fn sup_error(family: &MapFamily, orbit: &[Point], po: &PseudoOrbit) -> Result<f64> {
    let mut sup = 0.0f64;
    for (i, (a, b)) in orbit.iter().zip(&po.points).enumerate() {
        sup = sup.max(family.space_at(po.start_index + i)?.distance(a, b)?);
    }
    Ok(sup)
}

fn sampled_h(family: &MapFamily, variant: ShadowingVariant, cfg: &CheckConfig) -> Result<Verdict> {
    let mut rng = seeded(cfg.seed);
    for t in 0..cfg.trials {
        let len = 1 + t % MAX_CONTINUOUS_LEN;
        let x0 = random_start(family, &mut rng)?;
        let po = perturb_orbit(family, &x0, len, cfg.delta, cfg.seed.wrapping_add(t as u64))?;
        let ok = match landing_orbit(family, &po, cfg.eps) {
            Ok(orbit) => sup_error(family, &orbit, &po)? < cfg.eps,
            Err(_) => false,
        };
        if !ok {
            return Ok(Verdict {
                variant,
                pass: false,
                checked: t + 1,
                witness: Some(po.points),
                note: "sampled; shadow search failed on the witness".into(),
            });
        }
    }
    Ok(Verdict {
        variant,
        pass: true,
        checked: cfg.trials,
        witness: None,
        note: format!("sampled {} pseudo-orbits of length ≤ {MAX_CONTINUOUS_LEN}", cfg.trials),
    })
}

/// h-shadowing at fixed `(ε, δ)`.
pub fn h_shadow_check(family: &MapFamily, cfg: &CheckConfig) -> Result<Verdict> {
    if is_finite_family(family) {
        enumerate_check(family, ShadowingVariant::H, Mode::H, cfg)
    } else {
        sampled_h(family, ShadowingVariant::H, cfg)
    }
}

/// Limit pseudo-orbit with defects `min(1/(i+1), δ, 1/2)` shrunk below `δ`.
fn synthetic_limit_orbit(family: &MapFamily, cfg: &CheckConfig) -> Result<PseudoOrbit> {
    let cap = cfg.delta * (1.0 - 1e-9);
    let defects: Vec<f64> = (0..cfg.horizon).map(|i| (1.0 / (i + 1) as f64).min(cap).min(0.5)).collect();
    let mut rng = seeded(cfg.seed);
    let x0 = random_start(family, &mut rng)?;
    inject_defects(family, &x0, &defects, &Displacement::Alternating)
}

fn limit_clause(family: &MapFamily, cfg: &CheckConfig) -> Result<(bool, Option<Vec<Point>>, String)> {
    let po = synthetic_limit_orbit(family, cfg)?;
    let oracle: Box<dyn ShadowOracle> =
        if family.is_expanding() { Box::new(ExpandingSolver::default()) } else { Box::new(IsometryTransport) };
    let lc = LimitConfig { eps_scale: cfg.eps, levels: cfg.levels, seed: cfg.seed, ..Default::default() };
    match limit::limit_shadow_ungated(family, &po, oracle.as_ref(), &lc) {
        Ok(r) => {
            let target = cfg.eps / cfg.levels as f64;
            let ok = r.monotone && r.final_window_error() < target;
            let note = format!("final window error {:.3e} against ε/levels = {target:.3e}", r.final_window_error());
            Ok((ok, (!ok).then_some(po.points), note))
        }
        Err(e) => Ok((false, Some(po.points), format!("limit construction failed: {}", e.name()))),
    }
}

/// Both clauses of s-limit shadowing at fixed `(ε, δ)`.
pub fn s_limit_check(family: &MapFamily, cfg: &CheckConfig) -> Result<Verdict> {
    if is_finite_family(family) {
        // exact tails reduce clause (ii) to landing exactly on x_n
        let plain = enumerate_check(family, ShadowingVariant::SLimit, Mode::Plain, cfg)?;
        if !plain.pass {
            return Ok(Verdict { note: format!("clause (i) fails; {}", plain.note), ..plain });
        }
        let h = enumerate_check(family, ShadowingVariant::SLimit, Mode::H, cfg)?;
        let note = if h.pass { h.note.clone() } else { format!("clause (ii) fails; {}", h.note) };
        return Ok(Verdict { checked: plain.checked + h.checked, note, ..h });
    }
    let first = sampled_h(family, ShadowingVariant::SLimit, cfg)?;
    if !first.pass {
        return Ok(Verdict { note: format!("clause (i) fails; {}", first.note), ..first });
    }
    let (ok, witness, note) = limit_clause(family, cfg)?;
    Ok(Verdict {
        variant: ShadowingVariant::SLimit,
        pass: ok,
        checked: first.checked + 1,
        witness,
        note: if ok { note } else { format!("clause (ii) fails; {note}") },
    })
}

fn continuous_periodic(family: &MapFamily, cfg: &CheckConfig) -> Result<Verdict> {
    let mut rng = seeded(cfg.seed);
    for t in 0..cfg.trials {
        let period = 1 + t % 4;
        let x0 = random_start(family, &mut rng)?;
        let base = perturb_orbit(family, &x0, period, cfg.delta, cfg.seed.wrapping_add(t as u64))?;
        // closing the loop can create a defect up to the return distance
        let po = periodicize(family, &base, period, 4 * period)?;
        if po.max_defect() >= cfg.delta {
            continue;
        }
        let ok = solver::periodic_shadow(family, &po, period, cfg.eps).is_ok_and(|p| p.verdict);
        if !ok {
            return Ok(Verdict {
                variant: ShadowingVariant::Periodic,
                pass: false,
                checked: t + 1,
                witness: Some(po.points),
                note: "sampled".into(),
            });
        }
    }
    Ok(Verdict { variant: ShadowingVariant::Periodic, pass: true, checked: cfg.trials, witness: None, note: "sampled".into() })
}

/// Checker bound to `variant`.
pub fn variant_check(family: &MapFamily, variant: ShadowingVariant, cfg: &CheckConfig) -> Result<Verdict> {
    use ShadowingVariant as V;
    if is_finite_family(family) {
        let mode = match variant {
            V::Plain => Mode::Plain,
            V::H => Mode::H,
            V::SLimit => return s_limit_check(family, cfg),
            V::Limit => Mode::Limit,
            V::Average => Mode::Average,
            V::AsymptoticAverage => Mode::AsymptoticAverage,
            V::Periodic => Mode::Periodic,
            V::Lipschitz => Mode::Lipschitz { factor: cfg.eps / cfg.delta },
        };
        return enumerate_check(family, variant, mode, cfg);
    }
    match variant {
        V::H => sampled_h(family, V::H, cfg),
        V::Plain => Ok(Verdict { variant, ..sampled_h(family, V::Plain, cfg)? }),
        V::SLimit => s_limit_check(family, cfg),
        V::Limit => {
            let (pass, witness, note) = limit_clause(family, cfg)?;
            Ok(Verdict { variant, pass, checked: 1, witness, note })
        }
        V::Periodic => continuous_periodic(family, cfg),
        V::Lipschitz => {
            let trials: Vec<LipschitzTrial> = (0..cfg.trials)
                .map(|t| LipschitzTrial {
                    x0: Point::Real((t as f64 + 0.5) / cfg.trials as f64),
                    horizon: MAX_CONTINUOUS_LEN,
                    delta: cfg.delta,
                    seed: cfg.seed.wrapping_add(t as u64),
                })
                .collect();
            let r = solver::lipschitz_report(family, &trials);
            let pass = r.as_ref().is_ok_and(|r| r.estimate * cfg.delta < cfg.eps);
            let note = match &r {
                Ok(r) => format!("ratio {:.3} against certificate {:.3}", r.estimate, r.certificate),
                Err(e) => e.name().to_string(),
            };
            Ok(Verdict { variant, pass, checked: cfg.trials, witness: None, note })
        }
        V::Average | V::AsymptoticAverage => {
            Err(ShadowError::OracleUnavailable(format!("{variant} on a continuous space")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRecord {
    pub variant: ShadowingVariant,
    pub factor_f: Verdict,
    pub factor_g: Verdict,
    pub product: Verdict,
    /// `min(δ_F, δ_G)`, used for all three systems.
    pub delta0: f64,
    /// `(F ∧ G) ⇔ F×G`.
    pub consistent: bool,
    pub theorem_backed: bool,
}

/// Runs `variant` on `F`, `G` and `F×G` at the common `(ε, min(δ_F, δ_G))`.
pub fn product_equivalence_check(
    f: &MapFamily,
    g: &MapFamily,
    variant: ShadowingVariant,
    cfg: &CheckConfig,
    delta_f: f64,
    delta_g: f64,
) -> Result<EquivalenceRecord> {
    let delta0 = delta_f.min(delta_g);
    let cfg = CheckConfig { delta: delta0, ..cfg.clone() };
    let fg = MapFamily::product(f, g)?;
    let factor_f = variant_check(f, variant, &cfg)?;
    let factor_g = variant_check(g, variant, &cfg)?;
    let product = variant_check(&fg, variant, &cfg)?;
    let consistent = (factor_f.pass && factor_g.pass) == product.pass;
    Ok(EquivalenceRecord { variant, factor_f, factor_g, product, delta0, consistent, theorem_backed: variant.theorem_backed() })
}
