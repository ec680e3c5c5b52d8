//! State spaces and their points.
//!
//! Four kinds are supported: the circle ℝ/ℤ with the arc metric, the unit
//! interval, finite metric spaces given by a distance matrix, and binary
//! products carrying the max metric.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Result, ShadowError};

/// Slack used when testing membership of real coordinates.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// A point of some [`StateSpace`].
///
/// Circle and interval points are `Real`, finite-space points are `State`,
/// product points are `Pair`. JSON form: a number, `{"state": i}`, or a
/// two-element array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Real(f64),
    State { state: usize },
    Pair(Box<Point>, Box<Point>),
}

impl Point {
    pub fn state(i: usize) -> Self {
        Point::State { state: i }
    }

    pub fn pair(a: Point, b: Point) -> Self {
        Point::Pair(Box::new(a), Box::new(b))
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Point::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_state(&self) -> Option<usize> {
        match self {
            Point::State { state } => Some(*state),
            _ => None,
        }
    }

    pub fn as_pair(&self) -> Option<(&Point, &Point)> {
        match self {
            Point::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Flat list of coordinates, used for CSV output.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            Point::Real(x) => vec![*x],
            Point::State { state } => vec![*state as f64],
            Point::Pair(a, b) => {
                let mut c = a.coordinates();
                c.extend(b.coordinates());
                c
            }
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Real(x) => write!(f, "{x}"),
            Point::State { state } => write!(f, "s{state}"),
            Point::Pair(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpaceKind {
    Circle,
    Interval,
    Finite { distances: Vec<Vec<f64>> },
    Product { left: Box<StateSpace>, right: Box<StateSpace> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub kind: SpaceKind,
    pub description: String,
}

/// Reduces a circle representative to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed circle displacement from `from` to `to`, in `[-1/2, 1/2)`.
pub fn circle_offset(from: f64, to: f64) -> f64 {
    (to - from + 0.5).rem_euclid(1.0) - 0.5
}

impl StateSpace {
    pub fn circle() -> Self {
        Self { kind: SpaceKind::Circle, description: "circle R/Z".into() }
    }

    pub fn interval() -> Self {
        Self { kind: SpaceKind::Interval, description: "unit interval [0,1]".into() }
    }

    /// Finite space from a symmetric distance matrix. The matrix is checked
    /// for the metric axioms exactly.
    pub fn finite(distances: Vec<Vec<f64>>, description: impl Into<String>) -> Result<Self> {
        let n = distances.len();
        if n == 0 {
            return Err(ShadowError::InvalidArgument("finite space needs at least one point".into()));
        }
        for (i, row) in distances.iter().enumerate() {
            if row.len() != n {
                return Err(ShadowError::InvalidArgument(format!("distance row {i} has wrong length")));
            }
            for j in 0..n {
                let d = row[j];
                if !d.is_finite() || d < 0.0 {
                    return Err(ShadowError::InvalidArgument(format!("bad distance d({i},{j}) = {d}")));
                }
                if (i == j) != (d == 0.0) {
                    return Err(ShadowError::InvalidArgument(format!(
                        "identity of indiscernibles fails at ({i},{j})"
                    )));
                }
                if d != distances[j][i] {
                    return Err(ShadowError::InvalidArgument(format!("asymmetric at ({i},{j})")));
                }
                for k in 0..n {
                    if distances[i][k] > d + distances[j][k] + MEMBERSHIP_TOL {
                        return Err(ShadowError::InvalidArgument(format!(
                            "triangle inequality fails at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(Self { kind: SpaceKind::Finite { distances }, description: description.into() })
    }

    /// `n` points, all at mutual distance `d`.
    pub fn discrete(n: usize, d: f64) -> Self {
        let distances = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { d }).collect())
            .collect();
        Self {
            kind: SpaceKind::Finite { distances },
            description: format!("{n}-point uniform metric ({d})"),
        }
    }

    pub fn product(left: StateSpace, right: StateSpace) -> Self {
        let description = format!("({}) x ({})", left.description, right.description);
        Self {
            kind: SpaceKind::Product { left: Box::new(left), right: Box::new(right) },
            description,
        }
    }

    pub fn finite_len(&self) -> Option<usize> {
        match &self.kind {
            SpaceKind::Finite { distances } => Some(distances.len()),
            SpaceKind::Product { left, right } => Some(left.finite_len()? * right.finite_len()?),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.finite_len().is_some()
    }

    /// All points of a finite space (or product of finite spaces), in
    /// canonical order: states ascending, products lexicographic.
    pub fn enumerate(&self) -> Option<Vec<Point>> {
        match &self.kind {
            SpaceKind::Finite { distances } => Some((0..distances.len()).map(Point::state).collect()),
            SpaceKind::Product { left, right } => {
                let l = left.enumerate()?;
                let r = right.enumerate()?;
                Some(
                    l.iter()
                        .flat_map(|a| r.iter().map(move |b| Point::pair(a.clone(), b.clone())))
                        .collect(),
                )
            }
            _ => None,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (&self.kind, p) {
            (SpaceKind::Circle, Point::Real(x)) => x.is_finite(),
            (SpaceKind::Interval, Point::Real(x)) => {
                x.is_finite() && *x >= -MEMBERSHIP_TOL && *x <= 1.0 + MEMBERSHIP_TOL
            }
            (SpaceKind::Finite { distances }, Point::State { state }) => *state < distances.len(),
            (SpaceKind::Product { left, right }, Point::Pair(a, b)) => {
                left.contains(a) && right.contains(b)
            }
            _ => false,
        }
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(ShadowError::PointOutsideSpace { point: p.to_string(), space: self.description.clone() })
        }
    }

    /// Canonical representative: circle coordinates reduced to `[0,1)`,
    /// interval coordinates clamped.
    pub fn canonical(&self, p: &Point) -> Point {
        match (&self.kind, p) {
            (SpaceKind::Circle, Point::Real(x)) => Point::Real(wrap_unit(*x)),
            (SpaceKind::Interval, Point::Real(x)) => Point::Real(x.clamp(0.0, 1.0)),
            (SpaceKind::Product { left, right }, Point::Pair(a, b)) => {
                Point::pair(left.canonical(a), right.canonical(b))
            }
            _ => p.clone(),
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        match (&self.kind, a, b) {
            (SpaceKind::Circle, Point::Real(x), Point::Real(y)) => {
                let d = (wrap_unit(*x) - wrap_unit(*y)).abs();
                Ok(d.min(1.0 - d))
            }
            (SpaceKind::Interval, Point::Real(x), Point::Real(y)) => {
                self.check(a)?;
                self.check(b)?;
                Ok((x - y).abs())
            }
            (SpaceKind::Finite { distances }, Point::State { state: i }, Point::State { state: j }) => {
                self.check(a)?;
                self.check(b)?;
                Ok(distances[*i][*j])
            }
            (SpaceKind::Product { left, right }, Point::Pair(a1, a2), Point::Pair(b1, b2)) => {
                Ok(left.distance(a1, b1)?.max(right.distance(a2, b2)?))
            }
            _ => {
                let bad = if self.contains(a) { b } else { a };
                Err(ShadowError::PointOutsideSpace { point: bad.to_string(), space: self.description.clone() })
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            SpaceKind::Circle => 0.5,
            SpaceKind::Interval => 1.0,
            SpaceKind::Finite { distances } => distances
                .iter()
                .flat_map(|r| r.iter().copied())
                .fold(0.0, f64::max),
            SpaceKind::Product { left, right } => left.diameter().max(right.diameter()),
        }
    }

    /// Smallest positive distance of a finite space.
    pub fn min_positive_distance(&self) -> Option<f64> {
        match &self.kind {
            SpaceKind::Finite { distances } => distances
                .iter()
                .flat_map(|r| r.iter().copied())
                .filter(|d| *d > 0.0)
                .reduce(f64::min),
            SpaceKind::Product { left, right } => {
                match (left.min_positive_distance(), right.min_positive_distance()) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
            _ => None,
        }
    }

    /// Deterministic sample grid with `m` points per real coordinate.
    pub fn grid(&self, m: usize) -> Vec<Point> {
        match &self.kind {
            SpaceKind::Circle => (0..m).map(|i| Point::Real(i as f64 / m as f64)).collect(),
            SpaceKind::Interval => {
                if m <= 1 {
                    vec![Point::Real(0.0)]
                } else {
                    (0..m).map(|i| Point::Real(i as f64 / (m - 1) as f64)).collect()
                }
            }
            SpaceKind::Finite { distances } => (0..distances.len()).map(Point::state).collect(),
            SpaceKind::Product { left, right } => {
                let l = left.grid(m);
                let r = right.grid(m);
                l.iter()
                    .flat_map(|a| r.iter().map(move |b| Point::pair(a.clone(), b.clone())))
                    .collect()
            }
        }
    }

    /// Moves a real point by `amount` (signed). Circle wraps; interval flips
    /// the direction if the move would leave `[0,1]` and clamps as a last
    /// resort.
    pub fn shift_real(&self, x: f64, amount: f64) -> Result<f64> {
        match self.kind {
            SpaceKind::Circle => Ok(wrap_unit(x + amount)),
            SpaceKind::Interval => {
                let y = x + amount;
                if (0.0..=1.0).contains(&y) {
                    Ok(y)
                } else {
                    Ok((x - amount).clamp(0.0, 1.0))
                }
            }
            _ => Err(ShadowError::InvalidArgument(format!("{} has no real coordinate", self.description))),
        }
    }

    /// Nearest point among `candidates`, ties to the earliest.
    pub fn nearest<'a>(&self, target: &Point, candidates: &'a [Point]) -> Result<Option<(usize, &'a Point, f64)>> {
        let mut best: Option<(usize, &Point, f64)> = None;
        for (i, c) in candidates.iter().enumerate() {
            let d = self.distance(target, c)?;
            if best.as_ref().is_none_or(|(_, _, bd)| d < *bd) {
                best = Some((i, c, d));
            }
        }
        Ok(best)
    }

    /// Closed-ball intersection for circle, interval and products of those.
    ///
    /// Returns the smallest ball (in this representation) containing the
    /// intersection, or `None` when it is empty. Finite spaces are not
    /// supported.
    pub fn intersect_balls(&self, c1: &Point, r1: f64, c2: &Point, r2: f64) -> Result<Option<(Point, f64)>> {
        match (&self.kind, c1, c2) {
            (SpaceKind::Circle, Point::Real(a), Point::Real(b)) => {
                if r1 >= 0.5 {
                    return Ok(Some((c2.clone(), r2)));
                }
                if r2 >= 0.5 {
                    return Ok(Some((c1.clone(), r1)));
                }
                // local coordinates around b
                let o = circle_offset(*b, *a);
                Ok(intersect_1d(o - r1, o + r1, -r2, r2)
                    .map(|(lo, hi)| (Point::Real(wrap_unit(b + 0.5 * (lo + hi))), 0.5 * (hi - lo))))
            }
            (SpaceKind::Interval, Point::Real(a), Point::Real(b)) => {
                Ok(intersect_1d(a - r1, a + r1, b - r2, b + r2)
                    .map(|(lo, hi)| (Point::Real(0.5 * (lo + hi)), 0.5 * (hi - lo))))
            }
            (SpaceKind::Product { left, right }, Point::Pair(a1, a2), Point::Pair(b1, b2)) => {
                let l = left.intersect_balls(a1, r1, b1, r2)?;
                let r = right.intersect_balls(a2, r1, b2, r2)?;
                Ok(match (l, r) {
                    (Some((lc, lr)), Some((rc, rr))) => Some((Point::pair(lc, rc), lr.max(rr))),
                    _ => None,
                })
            }
            _ => Err(ShadowError::InvalidArgument(format!(
                "ball intersection unsupported on {}",
                self.description
            ))),
        }
    }
}

fn intersect_1d(lo1: f64, hi1: f64, lo2: f64, hi2: f64) -> Option<(f64, f64)> {
    let lo = lo1.max(lo2);
    let hi = hi1.min(hi2);
    (lo <= hi).then_some((lo, hi))
}
