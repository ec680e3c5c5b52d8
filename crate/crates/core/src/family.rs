//! Time-varying map families `f_n: X_n -> X_{n+1}`, their compositions
//! `F_n = f_{n-1} ∘ ... ∘ f_0`, preimages and local inverse branches.
//!
//! Contraction rates are attached to maps: the rate of `f_j` bounds the
//! Lipschitz constant of every inverse branch of `f_j`. The one-based
//! sequence `λ_1, λ_2, ...` used in diameter certificates is
//! `λ_i = rate(f_{i-1})`, see [`MapFamily::lambda`].

use serde::{Deserialize, Serialize};
use std::borrow::Cow;

use crate::error::{Result, ShadowError};
use crate::space::{circle_offset, wrap_unit, Point, SpaceKind, StateSpace};

/// A single map `f_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum MapKind {
    Identity,
    /// Circle rotation `x + alpha mod 1`.
    Rotation { alpha: f64 },
    /// Circle map `k x mod 1`.
    Multiply { factor: u32 },
    /// Degree-two piecewise-linear circle map: slope `1/split` on
    /// `[0, split)`, slope `1/(1-split)` on `[split, 1)`. Requires
    /// `split ∈ [1/2, 1)`; inverse branches are `max(split, 1-split)`-Lipschitz.
    SkewDoubling { split: f64 },
    /// Tent map on the unit interval.
    Tent,
    /// Finite-space map given by its image table.
    Table { image: Vec<usize> },
    Product { left: Box<MapKind>, right: Box<MapKind> },
}

impl MapKind {
    pub fn product(left: MapKind, right: MapKind) -> Self {
        MapKind::Product { left: Box::new(left), right: Box::new(right) }
    }

    /// Lipschitz bound of the inverse branches, when the map is expanding.
    pub fn rate(&self) -> Option<f64> {
        match self {
            MapKind::Multiply { factor } if *factor >= 2 => Some(1.0 / *factor as f64),
            MapKind::SkewDoubling { split } => Some(split.max(1.0 - split)),
            MapKind::Tent => Some(0.5),
            MapKind::Product { left, right } => Some(left.rate()?.max(right.rate()?)),
            _ => None,
        }
    }

    fn mismatch(&self, space: &StateSpace) -> ShadowError {
        ShadowError::InvalidArgument(format!("map {self:?} cannot act on {}", space.description))
    }

    pub fn apply(&self, space: &StateSpace, x: &Point) -> Result<Point> {
        match (self, &space.kind, x) {
            (MapKind::Identity, _, _) => Ok(x.clone()),
            (MapKind::Rotation { alpha }, SpaceKind::Circle, Point::Real(v)) => Ok(Point::Real(wrap_unit(v + alpha))),
            (MapKind::Multiply { factor }, SpaceKind::Circle, Point::Real(v)) => {
                Ok(Point::Real(wrap_unit(*factor as f64 * wrap_unit(*v))))
            }
            (MapKind::SkewDoubling { split }, SpaceKind::Circle, Point::Real(v)) => {
                let v = wrap_unit(*v);
                let y = if v < *split { v / split } else { (v - split) / (1.0 - split) };
                Ok(Point::Real(wrap_unit(y)))
            }
            (MapKind::Tent, SpaceKind::Interval, Point::Real(v)) => {
                Ok(Point::Real(if *v < 0.5 { 2.0 * v } else { 2.0 * (1.0 - v) }.clamp(0.0, 1.0)))
            }
            (MapKind::Table { image }, SpaceKind::Finite { .. }, Point::State { state }) => image
                .get(*state)
                .map(|s| Point::state(*s))
                .ok_or_else(|| ShadowError::PointOutsideSpace { point: x.to_string(), space: space.description.clone() }),
            (MapKind::Product { left, right }, SpaceKind::Product { left: ls, right: rs }, Point::Pair(a, b)) => {
                Ok(Point::pair(left.apply(ls, a)?, right.apply(rs, b)?))
            }
            _ => Err(self.mismatch(space)),
        }
    }

    /// All preimages of `w`, ordered by representative (lexicographic on
    /// products). This ordering defines branch ids.
    pub fn preimages(&self, space: &StateSpace, w: &Point) -> Result<Vec<Point>> {
        match (self, &space.kind, w) {
            (MapKind::Identity, _, _) => Ok(vec![w.clone()]),
            (MapKind::Rotation { alpha }, SpaceKind::Circle, Point::Real(v)) => Ok(vec![Point::Real(wrap_unit(v - alpha))]),
            (MapKind::Multiply { .. } | MapKind::SkewDoubling { .. }, SpaceKind::Circle, Point::Real(v)) => {
                let v = wrap_unit(*v);
                let degree = self.circle_degree();
                Ok((0..degree).map(|b| Point::Real(wrap_unit(self.lift_inverse(v + b as f64)))).collect())
            }
            (MapKind::Tent, SpaceKind::Interval, Point::Real(v)) => {
                let (a, b) = (v / 2.0, 1.0 - v / 2.0);
                Ok(if a == b { vec![Point::Real(a)] } else { vec![Point::Real(a), Point::Real(b)] })
            }
            (MapKind::Table { image }, SpaceKind::Finite { .. }, Point::State { state }) => Ok(image
                .iter()
                .enumerate()
                .filter(|(_, s)| *s == state)
                .map(|(i, _)| Point::state(i))
                .collect()),
            (MapKind::Product { left, right }, SpaceKind::Product { left: ls, right: rs }, Point::Pair(a, b)) => {
                let l = left.preimages(ls, a)?;
                let r = right.preimages(rs, b)?;
                Ok(l.iter().flat_map(|p| r.iter().map(move |q| Point::pair(p.clone(), q.clone()))).collect())
            }
            _ => Err(self.mismatch(space)),
        }
    }

    fn circle_degree(&self) -> usize {
        match self {
            MapKind::Multiply { factor } => *factor as usize,
            MapKind::SkewDoubling { .. } => 2,
            _ => 1,
        }
    }

    /// Inverse of the lift of a circle map, `[0, degree) -> [0, 1)`,
    /// extended by `G(v + degree) = G(v) + 1`.
    fn lift_inverse(&self, v: f64) -> f64 {
        match self {
            MapKind::Multiply { factor } => v / *factor as f64,
            MapKind::SkewDoubling { split } => {
                let turns = (v / 2.0).floor();
                let r = v - 2.0 * turns;
                let base = if r < 1.0 { split * r } else { split + (1.0 - split) * (r - 1.0) };
                base + turns
            }
            _ => v,
        }
    }

    /// Inverse branch through the `branch`-th preimage of `w`, evaluated at
    /// `y`. Callers are responsible for keeping `y` near `w`.
    pub fn inverse_branch(&self, space: &StateSpace, w: &Point, branch: usize, y: &Point) -> Result<Point> {
        match (self, &space.kind, w, y) {
            (MapKind::Identity, _, _, _) => {
                check_branch(branch, 1)?;
                Ok(y.clone())
            }
            (MapKind::Rotation { alpha }, SpaceKind::Circle, _, Point::Real(v)) => {
                check_branch(branch, 1)?;
                Ok(Point::Real(wrap_unit(v - alpha)))
            }
            (MapKind::Multiply { .. } | MapKind::SkewDoubling { .. }, SpaceKind::Circle, Point::Real(wv), Point::Real(yv)) => {
                check_branch(branch, self.circle_degree())?;
                let base = wrap_unit(*wv);
                let t = circle_offset(base, *yv);
                Ok(Point::Real(wrap_unit(self.lift_inverse(base + branch as f64 + t))))
            }
            (MapKind::Tent, SpaceKind::Interval, Point::Real(wv), Point::Real(yv)) => {
                let count = if *wv == 1.0 { 1 } else { 2 };
                check_branch(branch, count)?;
                let yv = yv.clamp(0.0, 1.0);
                Ok(Point::Real(if branch == 0 { yv / 2.0 } else { 1.0 - yv / 2.0 }))
            }
            (MapKind::Table { .. }, SpaceKind::Finite { .. }, _, _) => {
                let zs = self.preimages(space, w)?;
                let z = zs.get(branch).ok_or(ShadowError::InvalidBranchId { branch, count: zs.len() })?;
                let candidates = self.preimages(space, y)?;
                let (_, p, _) = space
                    .nearest(z, &candidates)?
                    .ok_or(ShadowError::PreimageSearchFailed { index: 0 })?;
                Ok(p.clone())
            }
            (
                MapKind::Product { left, right },
                SpaceKind::Product { left: ls, right: rs },
                Point::Pair(w1, w2),
                Point::Pair(y1, y2),
            ) => {
                let nr = right.preimages(rs, w2)?.len();
                let nl = left.preimages(ls, w1)?.len();
                check_branch(branch, nl * nr)?;
                Ok(Point::pair(
                    left.inverse_branch(ls, w1, branch / nr, y1)?,
                    right.inverse_branch(rs, w2, branch % nr, y2)?,
                ))
            }
            _ => Err(self.mismatch(space)),
        }
    }
}

fn check_branch(branch: usize, count: usize) -> Result<()> {
    if branch < count {
        Ok(())
    } else {
        Err(ShadowError::InvalidBranchId { branch, count })
    }
}

/// Eventually-periodic sequence: `prefix` then `cycle` repeated forever.
/// An empty cycle makes the sequence finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule<T> {
    pub prefix: Vec<T>,
    pub cycle: Vec<T>,
}

impl<T> Schedule<T> {
    pub fn constant(value: T) -> Self {
        Self { prefix: Vec::new(), cycle: vec![value] }
    }

    pub fn periodic(cycle: Vec<T>) -> Self {
        Self { prefix: Vec::new(), cycle }
    }

    pub fn finite(items: Vec<T>) -> Self {
        Self { prefix: items, cycle: Vec::new() }
    }

    pub fn get(&self, n: usize) -> Result<&T> {
        if n < self.prefix.len() {
            return Ok(&self.prefix[n]);
        }
        if self.cycle.is_empty() {
            return Err(ShadowError::IndexOutOfSchedule { index: n, len: self.prefix.len() });
        }
        Ok(&self.cycle[(n - self.prefix.len()) % self.cycle.len()])
    }

    /// Number of defined entries, `None` when infinite.
    pub fn len(&self) -> Option<usize> {
        self.cycle.is_empty().then_some(self.prefix.len())
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.cycle.is_empty()
    }

    pub fn iter_defined(&self) -> impl Iterator<Item = &T> {
        self.prefix.iter().chain(self.cycle.iter())
    }
}

impl<T: Clone> Schedule<T> {
    fn materialized(&self, prefix_len: usize, cycle_len: usize) -> Result<Schedule<T>> {
        let prefix = (0..prefix_len).map(|n| self.get(n).cloned()).collect::<Result<_>>()?;
        let cycle = (prefix_len..prefix_len + cycle_len).map(|n| self.get(n).cloned()).collect::<Result<_>>()?;
        Ok(Schedule { prefix, cycle })
    }
}

/// How the map at time `n` is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "steps", rename_all = "snake_case")]
pub enum Steps {
    Listed { maps: Schedule<MapKind> },
    /// `f_n` is [`MapKind::SkewDoubling`] with split `(n+1)/(n+2)`, so
    /// `λ_i = i/(i+1)`: the product of rates vanishes but their supremum is 1.
    HarmonicSkew,
    /// `f_n` has split `1 - 2^{-(n+1)}`, so `λ_i = 1 - 2^{-i}` and the
    /// product of rates stays positive.
    DyadicSkew,
    Product { left: Box<MapFamily>, right: Box<MapFamily> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFamily {
    pub label: String,
    pub spaces: Schedule<StateSpace>,
    pub steps: Steps,
    /// Radius `δ₀` of the balls on which inverse branches are defined.
    pub inverse_branch_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub start_index: usize,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansivenessVerdict {
    pub falsified: bool,
    pub counterexample: Option<(Point, Point)>,
    pub pairs_tested: usize,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl MapFamily {
    /// Builds a family with a listed map schedule, checking that every
    /// listed map acts on its scheduled space and that table maps are onto.
    pub fn listed(
        label: impl Into<String>,
        spaces: Schedule<StateSpace>,
        maps: Schedule<MapKind>,
        inverse_branch_radius: Option<f64>,
    ) -> Result<Self> {
        let family = Self { label: label.into(), spaces, steps: Steps::Listed { maps }, inverse_branch_radius };
        family.validate(true)?;
        Ok(family)
    }

    /// Like [`MapFamily::listed`] but accepts finite maps that are not onto.
    /// Attracting finite systems (every state falls into an invariant cycle)
    /// are necessarily of this kind.
    pub fn listed_non_onto(
        label: impl Into<String>,
        spaces: Schedule<StateSpace>,
        maps: Schedule<MapKind>,
    ) -> Result<Self> {
        let family = Self { label: label.into(), spaces, steps: Steps::Listed { maps }, inverse_branch_radius: None };
        family.validate(false)?;
        Ok(family)
    }

    pub fn validate(&self, require_onto: bool) -> Result<()> {
        if self.spaces.is_empty() {
            return Err(ShadowError::InvalidArgument("family needs at least one space".into()));
        }
        if let Some(r) = self.inverse_branch_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ShadowError::InvalidArgument(format!("inverse-branch radius {r} must be positive")));
            }
        }
        if let Steps::Listed { maps } = &self.steps {
            let checked = maps.prefix.len() + maps.cycle.len().max(1) * self.spaces.cycle.len().max(1);
            let limit = maps.len().unwrap_or(checked).min(checked);
            for n in 0..limit {
                let map = maps.get(n)?;
                let from = self.space_at(n)?;
                let to = self.space_at(n + 1).or_else(|_| self.space_at(n))?;
                validate_map(map, from, to, require_onto)?;
            }
        }
        Ok(())
    }

    /// Product family on `X × Y` with the max metric.
    pub fn product(left: &MapFamily, right: &MapFamily) -> Result<Self> {
        let (lp, lc) = (left.spaces.prefix.len(), left.spaces.cycle.len());
        let (rp, rc) = (right.spaces.prefix.len(), right.spaces.cycle.len());
        if (lc == 0) != (rc == 0) || (lc == 0 && lp != rp) {
            return Err(ShadowError::ScheduleMismatch("finite and infinite space schedules".into()));
        }
        if left.schedule_len() != right.schedule_len() {
            return Err(ShadowError::ScheduleMismatch(format!(
                "map schedule lengths {:?} vs {:?}",
                left.schedule_len(),
                right.schedule_len()
            )));
        }
        let prefix = lp.max(rp);
        let cycle = if lc == 0 { 0 } else { lc / gcd(lc, rc) * rc };
        let ls = left.spaces.materialized(prefix, cycle)?;
        let rs = right.spaces.materialized(prefix, cycle)?;
        let spaces = Schedule {
            prefix: ls.prefix.into_iter().zip(rs.prefix).map(|(a, b)| StateSpace::product(a, b)).collect(),
            cycle: ls.cycle.into_iter().zip(rs.cycle).map(|(a, b)| StateSpace::product(a, b)).collect(),
        };
        let inverse_branch_radius = match (left.inverse_branch_radius, right.inverse_branch_radius) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
        Ok(Self {
            label: format!("{} x {}", left.label, right.label),
            spaces,
            steps: Steps::Product { left: Box::new(left.clone()), right: Box::new(right.clone()) },
            inverse_branch_radius,
        })
    }

    /// Length of a finite map schedule; `None` when the family is infinite.
    pub fn schedule_len(&self) -> Option<usize> {
        match &self.steps {
            Steps::Listed { maps } => maps.len(),
            Steps::HarmonicSkew | Steps::DyadicSkew => None,
            Steps::Product { left, .. } => left.schedule_len(),
        }
    }

    pub fn space_at(&self, n: usize) -> Result<&StateSpace> {
        self.spaces.get(n)
    }

    pub fn is_constant_space(&self) -> bool {
        let mut it = self.spaces.iter_defined();
        match it.next() {
            Some(first) => it.all(|s| s == first),
            None => false,
        }
    }

    pub fn map_at(&self, n: usize) -> Result<Cow<'_, MapKind>> {
        match &self.steps {
            Steps::Listed { maps } => maps.get(n).map(Cow::Borrowed),
            Steps::HarmonicSkew => {
                Ok(Cow::Owned(MapKind::SkewDoubling { split: (n as f64 + 1.0) / (n as f64 + 2.0) }))
            }
            Steps::DyadicSkew => Ok(Cow::Owned(MapKind::SkewDoubling { split: 1.0 - 0.5f64.powi(n as i32 + 1) })),
            Steps::Product { left, right } => {
                Ok(Cow::Owned(MapKind::product(left.map_at(n)?.into_owned(), right.map_at(n)?.into_owned())))
            }
        }
    }

    /// Contraction rate of the inverse branches of `f_n`.
    pub fn rate_at(&self, n: usize) -> Result<Option<f64>> {
        Ok(self.map_at(n)?.rate())
    }

    /// One-based rate `λ_i = rate(f_{i-1})`, `i ≥ 1`.
    pub fn lambda(&self, i: usize) -> Result<f64> {
        if i == 0 {
            return Err(ShadowError::InvalidArgument("rates are indexed from 1".into()));
        }
        self.rate_at(i - 1)?.ok_or(ShadowError::NotExpanding)
    }

    /// `λ_1, ..., λ_k`.
    pub fn lambdas(&self, k: usize) -> Result<Vec<f64>> {
        (1..=k).map(|i| self.lambda(i)).collect()
    }

    /// `sup_n λ_n` over the whole schedule (1 for the skew families, whose
    /// rates accumulate at 1).
    pub fn sup_rate(&self) -> Result<f64> {
        match &self.steps {
            Steps::Listed { maps } => maps
                .iter_defined()
                .map(|m| m.rate().ok_or(ShadowError::NotExpanding))
                .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r))),
            Steps::HarmonicSkew | Steps::DyadicSkew => Ok(1.0),
            Steps::Product { left, right } => Ok(left.sup_rate()?.max(right.sup_rate()?)),
        }
    }

    pub fn is_expanding(&self) -> bool {
        self.inverse_branch_radius.is_some() && matches!(self.rate_at(0), Ok(Some(_)))
    }

    pub fn evaluate(&self, n: usize, x: &Point) -> Result<Point> {
        let space = self.space_at(n)?;
        space.check(x)?;
        let map = self.map_at(n)?;
        let target = self.space_at(n + 1).unwrap_or(space);
        let y = map.apply(space, x)?;
        Ok(target.canonical(&y))
    }

    /// Orbit segment `x, f_start(x), ...` of `steps` steps starting at time
    /// `start`.
    pub fn orbit_from(&self, start: usize, x: &Point, steps: usize) -> Result<OrbitSegment> {
        let mut points = Vec::with_capacity(steps + 1);
        points.push(self.space_at(start)?.canonical(x));
        for i in 0..steps {
            let next = self.evaluate(start + i, &points[i])?;
            points.push(next);
        }
        Ok(OrbitSegment { start_index: start, points })
    }

    /// `[F_0(x), ..., F_n(x)]`.
    pub fn compose(&self, x: &Point, n: usize) -> Result<OrbitSegment> {
        self.orbit_from(0, x, n)
    }

    pub fn preimages(&self, n: usize, w: &Point) -> Result<Vec<Point>> {
        let space = self.space_at(n)?;
        let target = self.space_at(n + 1).unwrap_or(space);
        target.check(w)?;
        let map = self.map_at(n)?;
        Ok(map.preimages(space, w)?.iter().map(|p| space.canonical(p)).collect())
    }

    fn require_radius(&self) -> Result<f64> {
        match self.inverse_branch_radius {
            Some(r) if self.is_expanding() => Ok(r),
            _ => Err(ShadowError::NotExpanding),
        }
    }

    /// Inverse branch of `f_n` through the `branch`-th preimage of `w`,
    /// evaluated at `y ∈ B(w, δ₀)`.
    pub fn inverse_branch(&self, n: usize, w: &Point, branch: usize, y: &Point) -> Result<Point> {
        let radius = self.require_radius()?;
        let target = self.space_at(n + 1).or_else(|_| self.space_at(n))?;
        let distance = target.distance(w, y)?;
        if distance >= radius {
            return Err(ShadowError::PointOutsideBranchDomain { distance, radius });
        }
        let space = self.space_at(n)?;
        let map = self.map_at(n)?;
        Ok(space.canonical(&map.inverse_branch(space, w, branch, y)?))
    }

    /// Branch id of `f_n` whose preimage of `f_n(z)` is `z` (nearest, lower
    /// id on ties).
    pub fn branch_containing(&self, n: usize, z: &Point) -> Result<usize> {
        let w = self.evaluate(n, z)?;
        let pre = self.preimages(n, &w)?;
        let space = self.space_at(n)?;
        space
            .nearest(z, &pre)?
            .map(|(i, _, _)| i)
            .ok_or(ShadowError::PreimageSearchFailed { index: n })
    }

    /// The local inverse `f_{n,z}^{-1}` applied to `y`.
    pub fn local_inverse(&self, n: usize, z: &Point, y: &Point) -> Result<Point> {
        let w = self.evaluate(n, z)?;
        let branch = self.branch_containing(n, z)?;
        self.inverse_branch(n, &w, branch, y)
    }

    /// Searches grid pairs `x ≠ y` of `X_0` whose orbits stay within `eps0`
    /// up to `horizon`. A hit refutes expansiveness with constant `eps0`; no
    /// hit certifies nothing.
    pub fn expansiveness_falsifier(&self, eps0: f64, horizon: usize, samples: usize) -> Result<ExpansivenessVerdict> {
        if !(eps0 > 0.0) {
            return Err(ShadowError::InvalidArgument("expansiveness constant must be positive".into()));
        }
        let space = self.space_at(0)?;
        let mut m = 2;
        while m * (m - 1) / 2 < samples && space.finite_len().is_none() {
            m += 1;
        }
        let grid = space.grid(m);
        let orbits = grid.iter().map(|p| self.compose(p, horizon)).collect::<Result<Vec<_>>>()?;
        let mut tested = 0;
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                if tested >= samples {
                    break;
                }
                tested += 1;
                let mut close = true;
                for n in 0..=horizon {
                    let sp = self.space_at(n)?;
                    if sp.distance(&orbits[i].points[n], &orbits[j].points[n])? > eps0 {
                        close = false;
                        break;
                    }
                }
                if close {
                    return Ok(ExpansivenessVerdict {
                        falsified: true,
                        counterexample: Some((grid[i].clone(), grid[j].clone())),
                        pairs_tested: tested,
                    });
                }
            }
        }
        Ok(ExpansivenessVerdict { falsified: false, counterexample: None, pairs_tested: tested })
    }
}

fn validate_map(map: &MapKind, from: &StateSpace, to: &StateSpace, require_onto: bool) -> Result<()> {
    match (map, &from.kind) {
        (MapKind::Table { image }, SpaceKind::Finite { distances }) => {
            let n_to = to.finite_len().ok_or_else(|| ShadowError::InvalidArgument("table map into non-finite space".into()))?;
            if image.len() != distances.len() {
                return Err(ShadowError::InvalidArgument(format!(
                    "table of length {} on a {}-point space",
                    image.len(),
                    distances.len()
                )));
            }
            let mut hit = vec![false; n_to];
            for &s in image {
                if s >= n_to {
                    return Err(ShadowError::InvalidArgument(format!("table image {s} out of range")));
                }
                hit[s] = true;
            }
            if require_onto && hit.iter().any(|h| !h) {
                return Err(ShadowError::InvalidArgument("table map is not onto".into()));
            }
            Ok(())
        }
        (MapKind::SkewDoubling { split }, SpaceKind::Circle) => {
            if (0.5..1.0).contains(split) {
                Ok(())
            } else {
                Err(ShadowError::InvalidArgument(format!("skew split {split} outside [1/2, 1)")))
            }
        }
        (MapKind::Multiply { factor }, SpaceKind::Circle) if *factor >= 1 => Ok(()),
        (MapKind::Identity, _) => Ok(()),
        (MapKind::Rotation { .. }, SpaceKind::Circle) => Ok(()),
        (MapKind::Tent, SpaceKind::Interval) => Ok(()),
        (MapKind::Product { left, right }, SpaceKind::Product { left: ls, right: rs }) => match &to.kind {
            SpaceKind::Product { left: lt, right: rt } => {
                validate_map(left, ls, lt, require_onto)?;
                validate_map(right, rs, rt, require_onto)
            }
            _ => Err(ShadowError::InvalidArgument("product map into non-product space".into())),
        },
        _ => Err(ShadowError::InvalidArgument(format!("map {map:?} cannot act on {}", from.description))),
    }
}
