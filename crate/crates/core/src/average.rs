//! Average shadowing through an invariant subset `A`: exceptional index sets,
//! dyadic block surgery, lifting into `A` and an exhaustive oracle on `A`.

use serde::{Deserialize, Serialize};

use crate::density::{
    self, cesaro_to_density_zero, dyadic_levels, upper_density, BlockDecomposition, IndexSet, Menu,
    Selection,
};
use crate::error::{Result, ShadowError};
use crate::family::MapFamily;
use crate::pseudo_orbit::PseudoOrbit;
use crate::space::{Point, StateSpace};

/// Steps over which invariance of a finite `A` is checked.
pub const INVARIANCE_STEPS: usize = 64;
const A_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ASet {
    /// Finitely many points (any space).
    Points { points: Vec<Point> },
    /// `[lo, hi]` in the real coordinate of the circle or the interval.
    Arc { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSubsystem {
    pub ambient: MapFamily,
    pub a: ASet,
}

impl InvariantSubsystem {
    /// Finite `A`; invariance and ontoness of the restriction are checked
    /// exactly over the first [`INVARIANCE_STEPS`] maps.
    pub fn finite(ambient: MapFamily, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(ShadowError::EmptyA);
        }
        let sub = Self { ambient, a: ASet::Points { points } };
        let steps = sub.ambient.schedule_len().map_or(INVARIANCE_STEPS, |l| l.min(INVARIANCE_STEPS));
        for n in 0..steps {
            sub.restriction_table(n)?;
        }
        Ok(sub)
    }

    /// Arc `A`; invariance is sampled on a grid.
    pub fn arc(ambient: MapFamily, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || lo < 0.0 || hi > 1.0 {
            return Err(ShadowError::EmptyA);
        }
        let sub = Self { ambient, a: ASet::Arc { lo, hi } };
        for n in 0..INVARIANCE_STEPS.min(sub.ambient.schedule_len().unwrap_or(usize::MAX)) {
            for i in 0..=64 {
                let x = Point::Real(lo + (hi - lo) * i as f64 / 64.0);
                let y = sub.ambient.evaluate(n, &x)?;
                if sub.distance_to_a(n + 1, &y)? > A_TOL {
                    return Err(ShadowError::HypothesisFailed(format!("f_{n} maps {x} out of A")));
                }
            }
        }
        Ok(sub)
    }

    pub fn points(&self) -> Option<&[Point]> {
        match &self.a {
            ASet::Points { points } => Some(points),
            ASet::Arc { .. } => None,
        }
    }

    /// Fill point `p`: the first point of `A` in canonical order.
    pub fn fill_point(&self) -> Point {
        match &self.a {
            ASet::Points { points } => points[0].clone(),
            ASet::Arc { lo, .. } => Point::Real(*lo),
        }
    }

    /// `table[j]` is the index in `A` of `f_n(a_j)`. Errors when `f_n(A) ⊄ A`
    /// or when the restriction misses a point of `A`.
    pub fn restriction_table(&self, n: usize) -> Result<Vec<usize>> {
        let points = self.points().ok_or_else(|| ShadowError::OracleUnavailable("A is not finite".into()))?;
        let target = self.ambient.space_at(n + 1).or_else(|_| self.ambient.space_at(n))?;
        let mut table = Vec::with_capacity(points.len());
        for p in points {
            let y = self.ambient.evaluate(n, p)?;
            let (j, _, d) = target.nearest(&y, points)?.ok_or(ShadowError::EmptyA)?;
            if d > A_TOL {
                return Err(ShadowError::HypothesisFailed(format!("f_{n} maps {p} out of A")));
            }
            table.push(j);
        }
        let mut hit = vec![false; points.len()];
        table.iter().for_each(|&j| hit[j] = true);
        if hit.iter().any(|h| !h) {
            return Err(ShadowError::HypothesisFailed(format!("f_{n} restricted to A is not onto")));
        }
        Ok(table)
    }

    /// The restriction `F|_A` as a finite family over `steps` maps, with the
    /// induced metric.
    pub fn restriction(&self, steps: usize) -> Result<MapFamily> {
        let points = self.points().ok_or_else(|| ShadowError::OracleUnavailable("A is not finite".into()))?;
        let space = self.ambient.space_at(0)?;
        let distances = points
            .iter()
            .map(|a| points.iter().map(|b| space.distance(a, b)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let sub = StateSpace::finite(distances, format!("A ⊂ {}", space.description))?;
        let maps = (0..steps)
            .map(|n| Ok(crate::family::MapKind::Table { image: self.restriction_table(n)? }))
            .collect::<Result<Vec<_>>>()?;
        MapFamily::listed(
            &format!("{} restricted to A", self.ambient.label),
            crate::family::Schedule::constant(sub),
            crate::family::Schedule::finite(maps),
            None,
        )
    }

    pub fn distance_to_a(&self, n: usize, x: &Point) -> Result<f64> {
        Ok(self.nearest_in_a(n, x)?.1)
    }

    /// Nearest point of `A` to `x` (earliest on ties) and its distance.
    pub fn nearest_in_a(&self, n: usize, x: &Point) -> Result<(Point, f64)> {
        let space = self.ambient.space_at(n)?;
        match &self.a {
            ASet::Points { points } => {
                let (_, p, d) = space.nearest(x, points)?.ok_or(ShadowError::EmptyA)?;
                Ok((p.clone(), d))
            }
            ASet::Arc { lo, hi } => {
                let v = x.as_real().ok_or_else(|| ShadowError::PointOutsideSpace {
                    point: x.to_string(),
                    space: space.description.clone(),
                })?;
                if (*lo..=*hi).contains(&v) {
                    return Ok((x.clone(), 0.0));
                }
                let (a, b) = (Point::Real(*lo), Point::Real(*hi));
                let (da, db) = (space.distance(x, &a)?, space.distance(x, &b)?);
                Ok(if da <= db { (a, da) } else { (b, db) })
            }
        }
    }

    pub fn contains(&self, n: usize, x: &Point) -> Result<bool> {
        Ok(self.distance_to_a(n, x)? <= A_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitStatistics {
    pub epsilon: f64,
    pub n: usize,
    /// `(1/n) #{0 ≤ i < n : d(F_i(x), A) < ε}` per sample point.
    pub fractions: Vec<f64>,
    pub worst_fraction: f64,
    pub verdict: bool,
}

pub fn visit_condition(sub: &InvariantSubsystem, eps: f64, n: usize, samples: &[Point]) -> Result<VisitStatistics> {
    if n == 0 {
        return Err(ShadowError::InvalidArgument("window length must be at least 1".into()));
    }
    let mut fractions = Vec::with_capacity(samples.len());
    for x in samples {
        let orbit = sub.ambient.compose(x, n - 1)?;
        let mut hits = 0usize;
        for (i, p) in orbit.points.iter().enumerate() {
            if sub.distance_to_a(i, p)? < eps {
                hits += 1;
            }
        }
        fractions.push(hits as f64 / n as f64);
    }
    let worst_fraction = fractions.iter().copied().fold(1.0, f64::min);
    let verdict = fractions.iter().all(|&f| f > 1.0 - eps);
    Ok(VisitStatistics { epsilon: eps, n, fractions, worst_fraction, verdict })
}

/// Least window `n ≤ max_n` at which the visit condition holds at `eps`.
pub fn visit_window(sub: &InvariantSubsystem, eps: f64, max_n: usize, samples: &[Point]) -> Result<Option<VisitStatistics>> {
    for n in 1..=max_n {
        let v = visit_condition(sub, eps, n, samples)?;
        if v.verdict {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Union of the aligned blocks `{l2^n, …, (l+1)2^n - 1}` that meet `J`.
pub fn dyadic_cover(set: &IndexSet, n: u32) -> IndexSet {
    let size = 1usize << n;
    let mut members = Vec::new();
    let mut last_block = None;
    for &m in set.members() {
        let l = m / size;
        if last_block != Some(l) {
            members.extend(l * size..((l + 1) * size).min(set.horizon));
            last_block = Some(l);
        }
    }
    IndexSet::new(set.horizon, members)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSurgery {
    pub j_prime: IndexSet,
    pub decomposition: BlockDecomposition,
    pub j_prime_density: f64,
    pub markers_density: f64,
    /// Density of `J′ ∪ B` at the horizon.
    pub support_density: f64,
}

/// Dyadic covers `J_n` of `J`, patched along boundaries `m_i ∈ 2^{i+1}ℕ`,
/// `m_i ≥ K_i`, with `l_i = i`.
pub fn block_decompose(j_union: &IndexSet, thresholds: &[usize]) -> Result<BlockSurgery> {
    let horizon = j_union.horizon;
    if horizon < 2 {
        return Err(ShadowError::ZeroHorizon);
    }
    let full = upper_density(j_union, horizon)?;
    let half = upper_density(j_union, horizon / 2)?;
    if full > 0.0 && full >= half {
        return Err(ShadowError::HypothesisFailed(format!(
            "density of J does not decrease under horizon doubling ({half} → {full})"
        )));
    }
    let levels = (usize::BITS - horizon.leading_zeros()) as usize;
    let covers: Vec<IndexSet> = (0..levels as u32).map(|n| dyadic_cover(j_union, n)).collect();
    let menus: Vec<Menu> = (0..levels)
        .map(|i| Menu::Arithmetic { step: 1 << (i + 2), offset: 0, min: thresholds.get(i + 1).copied().unwrap_or(0) })
        .collect();
    let patched = match density::patch_sets_with(&covers, &menus, horizon, Selection::Identity) {
        Ok(p) => p,
        // no admissible first boundary: one block covered by J_1
        Err(ShadowError::MenuExhausted { .. }) => density::PatchedSet {
            set: covers[1.min(covers.len() - 1)].clone(),
            boundaries: vec![0, horizon],
            selectors: vec![1.min(covers.len() - 1)],
            density: upper_density(&covers[1.min(covers.len() - 1)], horizon)?,
        },
        Err(e) => return Err(e),
    };
    let decomposition = BlockDecomposition::new(&patched);
    let support = patched.set.union(&decomposition.fill_markers);
    Ok(BlockSurgery {
        j_prime_density: patched.density,
        markers_density: upper_density(&decomposition.fill_markers, horizon)?,
        support_density: upper_density(&support, horizon)?,
        j_prime: patched.set,
        decomposition,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedOrbit {
    pub points: Vec<Point>,
    pub defects: Vec<f64>,
    /// Indices with a positive defect.
    pub support: IndexSet,
    /// `support ⊆ J′ ∪ B`.
    pub support_ok: bool,
    pub final_cesaro: f64,
}

/// `y_i = p` on `J′`; on each block `[a, b]` the restricted orbit of the
/// point of `A` nearest to `x_a`.
pub fn lift_to_a(sub: &InvariantSubsystem, po: &PseudoOrbit, surgery: &BlockSurgery, p: &Point) -> Result<LiftedOrbit> {
    let len = po.points.len();
    if surgery.j_prime.horizon != len {
        return Err(ShadowError::InvalidArgument(format!(
            "block surgery covers {} indices, the pseudo-orbit has {len} points",
            surgery.j_prime.horizon
        )));
    }
    if !sub.contains(0, p)? {
        return Err(ShadowError::InvalidArgument(format!("fill point {p} is not in A")));
    }
    let s = po.start_index;
    let mut points = vec![p.clone(); len];
    for &(a, b) in &surgery.decomposition.blocks {
        let (start, _) = sub.nearest_in_a(s + a, &po.points[a])?;
        points[a] = start;
        for i in a..b {
            points[i + 1] = sub.ambient.evaluate(s + i, &points[i])?;
        }
    }
    let mut defects = Vec::with_capacity(len - 1);
    for i in 0..len - 1 {
        let image = sub.ambient.evaluate(s + i, &points[i])?;
        defects.push(sub.ambient.space_at(s + i + 1)?.distance(&image, &points[i + 1])?);
    }
    let support = IndexSet::new(len, (0..len - 1).filter(|&i| defects[i] > 0.0));
    let allowed = surgery.j_prime.union(&surgery.decomposition.fill_markers);
    let support_ok = support.members().iter().all(|&i| allowed.contains(i));
    let final_cesaro = defects.iter().sum::<f64>() / defects.len().max(1) as f64;
    Ok(LiftedOrbit { points, defects, support, support_ok, final_cesaro })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleCertificate {
    /// `Σ d(F_i y, x_i)`.
    pub total: f64,
    /// `Σ d(F_i y, y_i)` with `y_i` the lifted sequence.
    pub to_lift: f64,
    /// `Σ_{i ∉ J′} d(y_i, x_i)`.
    pub lift_off_j: f64,
    /// `diam(X) · #J′`.
    pub on_j: f64,
    pub count: usize,
    /// `total ≤ to_lift + lift_off_j + on_j`.
    pub holds: bool,
}

impl TriangleCertificate {
    pub fn terms_as_means(&self) -> [f64; 4] {
        let n = self.count as f64;
        [self.total / n, self.to_lift / n, self.lift_off_j / n, self.on_j / n]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTracking {
    pub checked_blocks: usize,
    pub violations: usize,
    /// Largest `max_j d(x_{a+j}, F_j(y_a))` over blocks of length at least
    /// `2^{k+1}` starting past `m_k`, with its bound `2^{-k}`.
    pub worst: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageReport {
    pub point: Point,
    pub cesaro_error: f64,
    pub cesaro_series: Vec<f64>,
    pub exceptional_density: f64,
    pub surgery: BlockSurgery,
    pub lifted_cesaro: f64,
    pub support_ok: bool,
    pub triangle: TriangleCertificate,
    pub tracking: BlockTracking,
    pub visits: Vec<VisitStatistics>,
}

/// Visit windows searched for each rung of the ladder `1/2, 1/4, 1/8`.
pub const VISIT_LADDER: [f64; 3] = [0.5, 0.25, 0.125];
pub const VISIT_MAX_WINDOW: usize = 256;

fn visit_samples(sub: &InvariantSubsystem) -> Result<Vec<Point>> {
    let space = sub.ambient.space_at(0)?;
    Ok(space.enumerate().unwrap_or_else(|| space.grid(65)))
}

/// `K_i`: least index past which every index outside `J` has defect and
/// distance to `A` below `2^{-i}`.
fn thresholds(defects: &[f64], dist_a: &[f64], j: &IndexSet, levels: usize) -> Vec<usize> {
    let mask = j.mask();
    (0..levels)
        .map(|i| {
            let bound = 0.5f64.powi(i as i32);
            let bad = |k: usize| {
                !mask[k] && (dist_a[k] >= bound || defects.get(k).is_some_and(|&d| d >= bound))
            };
            (0..dist_a.len()).rev().find(|&k| bad(k)).map_or(0, |k| k + 1)
        })
        .collect()
}

fn block_tracking(sub: &InvariantSubsystem, po: &PseudoOrbit, lifted: &LiftedOrbit, surgery: &BlockSurgery) -> Result<BlockTracking> {
    let bounds = &surgery.decomposition.boundaries;
    let mut checked = 0;
    let mut violations = 0;
    let mut worst: Option<(f64, f64)> = None;
    for &(a, b) in &surgery.decomposition.blocks {
        let Some(k) = (1..bounds.len() - 1).rev().find(|&k| a > bounds[k]) else { continue };
        if b + 1 - a < 1 << (k + 1) {
            continue;
        }
        let bound = 0.5f64.powi(k as i32);
        let mut err = 0.0f64;
        for i in a..=b {
            err = err.max(sub.ambient.space_at(po.start_index + i)?.distance(&po.points[i], &lifted.points[i])?);
        }
        checked += 1;
        if err >= bound {
            violations += 1;
        }
        if worst.map_or(true, |(w, _)| err > w) {
            worst = Some((err, bound));
        }
    }
    Ok(BlockTracking { checked_blocks: checked, violations, worst })
}

/// Exhaustive averaged-shadowing oracle on a finite `A`: the start whose
/// orbit minimizes the Cesàro mean of `d(F_i z, target_i)`.
pub fn exhaustive_average_oracle(sub: &InvariantSubsystem, target: &[Point], start_index: usize) -> Result<(Point, f64)> {
    let points = sub.points().ok_or_else(|| ShadowError::OracleUnavailable("A is a continuum".into()))?;
    let mut best: Option<(Point, f64)> = None;
    for z in points {
        let orbit = sub.ambient.orbit_from(start_index, z, target.len() - 1)?;
        let mut sum = 0.0;
        for (i, (p, t)) in orbit.points.iter().zip(target).enumerate() {
            sum += sub.ambient.space_at(start_index + i)?.distance(p, t)?;
        }
        let mean = sum / target.len() as f64;
        if best.as_ref().map_or(true, |(_, b)| mean < *b) {
            best = Some((z.clone(), mean));
        }
    }
    best.ok_or(ShadowError::EmptyA)
}

/// Runs the full construction and returns an averaged shadow in `A`.
pub fn average_shadow_point(sub: &InvariantSubsystem, po: &PseudoOrbit) -> Result<AverageReport> {
    let samples = visit_samples(sub)?;
    let mut visits = Vec::with_capacity(VISIT_LADDER.len());
    for eps in VISIT_LADDER {
        match visit_window(sub, eps, VISIT_MAX_WINDOW, &samples)? {
            Some(v) => visits.push(v),
            None => {
                return Err(ShadowError::HypothesisFailed(format!(
                    "visit condition fails at ε = {eps} for every window up to {VISIT_MAX_WINDOW}"
                )))
            }
        }
    }
    if sub.points().is_none() {
        return Err(ShadowError::OracleUnavailable("averaged shadowing inside a continuum A".into()));
    }

    let len = po.points.len();
    let s = po.start_index;
    let dist_a = po
        .points
        .iter()
        .enumerate()
        .map(|(i, x)| sub.distance_to_a(s + i, x))
        .collect::<Result<Vec<_>>>()?;
    let levels = dyadic_levels(24);
    let q1 = cesaro_to_density_zero(&dist_a, &levels)?.set;
    let mut defects = po.defects.clone();
    defects.push(0.0);
    let q2 = cesaro_to_density_zero(&defects, &levels)?.set;
    let j = q1.union(&q2);
    let exceptional_density = upper_density(&j, len)?;

    let k = thresholds(&po.defects, &dist_a, &j, usize::BITS as usize);
    let surgery = block_decompose(&j, &k)?;
    let p = sub.fill_point();
    let lifted = lift_to_a(sub, po, &surgery, &p)?;
    let (point, _) = exhaustive_average_oracle(sub, &lifted.points, s)?;
    let orbit = sub.ambient.orbit_from(s, &point, len - 1)?.points;

    let diam = sub.ambient.space_at(s)?.diameter();
    let jmask = surgery.j_prime.mask();
    let mut total = 0.0;
    let mut to_lift = 0.0;
    let mut lift_off_j = 0.0;
    let mut cesaro_series = Vec::with_capacity(len);
    for i in 0..len {
        let space = sub.ambient.space_at(s + i)?;
        total += space.distance(&orbit[i], &po.points[i])?;
        to_lift += space.distance(&orbit[i], &lifted.points[i])?;
        if !jmask[i] {
            lift_off_j += space.distance(&lifted.points[i], &po.points[i])?;
        }
        cesaro_series.push(total / (i + 1) as f64);
    }
    let on_j = diam * surgery.j_prime.len() as f64;
    let triangle = TriangleCertificate { total, to_lift, lift_off_j, on_j, count: len, holds: total <= to_lift + lift_off_j + on_j };
    let tracking = block_tracking(sub, po, &lifted, &surgery)?;
    Ok(AverageReport {
        point,
        cesaro_error: total / len as f64,
        cesaro_series,
        exceptional_density,
        lifted_cesaro: lifted.final_cesaro,
        support_ok: lifted.support_ok,
        surgery,
        triangle,
        tracking,
        visits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::pseudo_orbit::{inject_defects, Displacement};

    fn attractor() -> InvariantSubsystem {
        InvariantSubsystem::finite(builtins::attractor8(), builtins::attractor8_cycle().into_iter().map(Point::state).collect())
            .unwrap()
    }

    #[test]
    fn visit_examples() {
        let sub = attractor();
        let v = visit_condition(&sub, 0.5, 10, &[Point::state(0)]).unwrap();
        assert_eq!(v.worst_fraction, 1.0);
        let all: Vec<Point> = (0..8).map(Point::state).collect();
        let v = visit_condition(&sub, 0.5, 10, &all).unwrap();
        assert!(v.verdict);
        assert_eq!(v.worst_fraction, 0.8);

        let id = InvariantSubsystem::finite(builtins::identity3(), vec![Point::state(0)]).unwrap();
        let v = visit_condition(&id, 0.1, 10, &[Point::state(1)]).unwrap();
        assert_eq!(v.worst_fraction, 0.0);
        assert!(!v.verdict);
    }

    #[test]
    fn invariance_checked() {
        assert_eq!(InvariantSubsystem::finite(builtins::attractor8(), vec![]).unwrap_err(), ShadowError::EmptyA);
        assert!(matches!(
            InvariantSubsystem::finite(builtins::attractor8(), vec![Point::state(0), Point::state(1)]),
            Err(ShadowError::HypothesisFailed(_))
        ));
        let r = attractor().restriction(3).unwrap();
        assert_eq!(r.evaluate(0, &Point::state(2)).unwrap(), Point::state(0));
    }

    #[test]
    fn dyadic_cover_blocks() {
        let j = IndexSet::new(20, [1, 9]);
        assert_eq!(dyadic_cover(&j, 2).members(), &[0, 1, 2, 3, 8, 9, 10, 11]);
        assert_eq!(dyadic_cover(&j, 0), j);
    }

    #[test]
    fn empty_j_gives_one_block() {
        let s = block_decompose(&IndexSet::empty(100), &[]).unwrap();
        assert_eq!(s.decomposition.blocks, vec![(0, 99)]);
        assert_eq!(s.decomposition.fill_markers.members(), &[99]);
    }

    #[test]
    fn dense_j_rejected() {
        assert!(matches!(block_decompose(&IndexSet::multiples(2, 1 << 10), &[]), Err(ShadowError::HypothesisFailed(_))));
    }

    #[test]
    fn squares_decomposition() {
        let horizon = 1 << 14;
        let s = block_decompose(&IndexSet::squares(horizon), &[]).unwrap();
        let runs = &s.decomposition.blocks;
        assert!(runs.windows(2).all(|w| w[0].0 <= w[0].1 && w[0].1 < w[1].0));
        let mask = s.j_prime.mask();
        let mut covered = vec![false; horizon];
        for &(a, b) in runs {
            for c in &mut covered[a..=b] {
                *c = true;
            }
        }
        assert!((0..horizon).all(|i| covered[i] != mask[i]));
        assert!(IndexSet::squares(horizon).members().iter().all(|&q| s.j_prime.contains(q)));
    }

    #[test]
    fn exact_orbit_in_a_is_its_own_shadow() {
        let sub = attractor();
        let po = PseudoOrbit::true_orbit(&sub.ambient, &Point::state(1), 200).unwrap();
        let r = average_shadow_point(&sub, &po).unwrap();
        assert_eq!(r.point, Point::state(1));
        assert_eq!(r.cesaro_error, 0.0);
    }

    #[test]
    fn identity_control_fails_visit_gate() {
        let id = InvariantSubsystem::finite(builtins::identity3(), vec![Point::state(0)]).unwrap();
        let po = PseudoOrbit::true_orbit(&id.ambient, &Point::state(1), 20).unwrap();
        assert!(matches!(average_shadow_point(&id, &po), Err(ShadowError::HypothesisFailed(_))));
    }

    #[test]
    fn squares_injection_small_scale() {
        let sub = attractor();
        let horizon = 2000;
        let sq = IndexSet::squares(horizon);
        let defects: Vec<f64> = (0..horizon).map(|i| if sq.contains(i) { 1.0 } else { 0.0 }).collect();
        let partner = Displacement::Partner { partner: builtins::attractor8_partner() };
        let po = inject_defects(&sub.ambient, &Point::state(0), &defects, &partner).unwrap();
        let r = average_shadow_point(&sub, &po).unwrap();
        assert!(r.support_ok);
        assert!(r.triangle.holds);
        assert!(r.cesaro_error < 0.05, "{}", r.cesaro_error);
    }
}
