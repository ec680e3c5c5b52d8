//! Pseudo-orbits, their defect sequences, and the finite-horizon verdicts
//! for δ-, limit and asymptotic-average pseudo-orbits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShadowError};
use crate::family::MapFamily;
use crate::space::{Point, SpaceKind, StateSpace};

/// Tolerance for recomputed defects.
pub const DEFECT_TOL: f64 = 1e-12;

/// A finite sequence `x_0, ..., x_K` with cached defects
/// `e_i = d(f_i(x_i), x_{i+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    pub start_index: usize,
    pub points: Vec<Point>,
    pub defects: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectProfile {
    pub max_defect: f64,
    /// `c_n = (1/n) Σ_{i<n} e_i` for `n = 1..=K`; entry `n-1` holds `c_n`.
    pub cesaro_means: Vec<f64>,
    /// `t_n = max_{i≥n} e_i` within the horizon, `n = 0..K`.
    pub tail_sup: Vec<f64>,
}

/// Finite-horizon verdicts. The limit and average verdicts approximate
/// statements about infinite sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub is_delta_pseudo: bool,
    pub is_limit_pseudo: bool,
    pub is_asymptotic_average: bool,
    pub horizon: usize,
    pub tail_start: usize,
    pub tail_sup: f64,
    pub final_cesaro: f64,
    pub note: String,
}

/// How synthetic defects are realized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Displacement {
    /// Real coordinates move by `+e_i` at even `i` and `-e_i` at odd `i`;
    /// finite coordinates move to the lowest-indexed point at distance `e_i`.
    Alternating,
    /// Directions (or finite targets) drawn from a seeded generator.
    Seeded { seed: u64 },
    /// Finite spaces only: whenever `e_i > 0` the image moves to
    /// `partner[image]`, which must lie at distance exactly `e_i`.
    Partner { partner: Vec<usize> },
}

impl PseudoOrbit {
    pub fn new(family: &MapFamily, start_index: usize, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(ShadowError::InvalidArgument("pseudo-orbit needs at least one point".into()));
        }
        let mut canon = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let space = family.space_at(start_index + i)?;
            space.check(p)?;
            canon.push(space.canonical(p));
        }
        let mut defects = Vec::with_capacity(canon.len() - 1);
        for i in 0..canon.len() - 1 {
            let n = start_index + i;
            let image = family.evaluate(n, &canon[i])?;
            defects.push(family.space_at(n + 1)?.distance(&image, &canon[i + 1])?);
        }
        Ok(Self { start_index, points: canon, defects })
    }

    /// The exact orbit of `x0` over `horizon` steps.
    pub fn true_orbit(family: &MapFamily, x0: &Point, horizon: usize) -> Result<Self> {
        let seg = family.compose(x0, horizon)?;
        Ok(Self { start_index: 0, defects: vec![0.0; horizon], points: seg.points })
    }

    /// Number of steps `K` (points are `x_0..x_K`).
    pub fn horizon(&self) -> usize {
        self.points.len() - 1
    }

    pub fn max_defect(&self) -> f64 {
        self.defects.iter().copied().fold(0.0, f64::max)
    }

    /// First `k + 1` points.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.horizon());
        Self {
            start_index: self.start_index,
            points: self.points[..=k].to_vec(),
            defects: self.defects[..k].to_vec(),
        }
    }

    /// Recomputes every defect and compares with the cache.
    pub fn verify_defects(&self, family: &MapFamily) -> Result<bool> {
        let fresh = Self::new(family, self.start_index, self.points.clone())?;
        Ok(fresh.defects.iter().zip(&self.defects).all(|(a, b)| (a - b).abs() <= DEFECT_TOL))
    }

    pub fn profile(&self) -> DefectProfile {
        defect_profile(&self.defects)
    }

    /// CSV with columns `index, x0[, x1, ...], defect`; the last row has an
    /// empty defect.
    pub fn to_csv(&self) -> Result<String> {
        let dims = self.points[0].coordinates().len();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["index".to_string()];
        header.extend((0..dims).map(|d| format!("x{d}")));
        header.push("defect".into());
        w.write_record(&header).map_err(csv_err)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row = vec![(self.start_index + i).to_string()];
            row.extend(p.coordinates().iter().map(|c| format!("{c:.17e}")));
            row.push(self.defects.get(i).map(|d| format!("{d:.17e}")).unwrap_or_default());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| ShadowError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| ShadowError::Io(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> ShadowError {
    ShadowError::Io(e.to_string())
}

pub fn defect_profile(defects: &[f64]) -> DefectProfile {
    let mut cesaro_means = Vec::with_capacity(defects.len());
    let mut sum = 0.0;
    for (i, e) in defects.iter().enumerate() {
        sum += e;
        cesaro_means.push(sum / (i + 1) as f64);
    }
    let mut tail_sup = vec![0.0; defects.len()];
    let mut running = 0.0f64;
    for i in (0..defects.len()).rev() {
        running = running.max(defects[i]);
        tail_sup[i] = running;
    }
    DefectProfile { max_defect: running, cesaro_means, tail_sup }
}

/// Start of the tail window used for limit verdicts: the last quarter.
pub fn tail_start(horizon: usize) -> usize {
    horizon - horizon / 4
}

/// δ-, limit and average verdicts over the full horizon of `po`.
pub fn classify(po: &PseudoOrbit, delta: f64, tol: f64) -> Classification {
    classify_defects(&po.defects, delta, tol)
}

pub fn classify_defects(defects: &[f64], delta: f64, tol: f64) -> Classification {
    let profile = defect_profile(defects);
    let horizon = defects.len();
    let start = tail_start(horizon);
    let tail_sup = profile.tail_sup.get(start).copied().unwrap_or(0.0);
    let final_cesaro = profile.cesaro_means.last().copied().unwrap_or(0.0);
    Classification {
        is_delta_pseudo: profile.max_defect < delta,
        is_limit_pseudo: tail_sup < tol,
        is_asymptotic_average: final_cesaro < tol,
        horizon,
        tail_start: start,
        tail_sup,
        final_cesaro,
        note: format!("finite-horizon approximation over {horizon} defects; tail window starts at {start}"),
    }
}

pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random displacement of magnitude `< noise` in every coordinate.
pub(crate) fn random_displace(space: &StateSpace, p: &Point, noise: f64, rng: &mut ChaCha8Rng) -> Result<Point> {
    match (&space.kind, p) {
        (SpaceKind::Circle | SpaceKind::Interval, Point::Real(x)) => {
            if noise == 0.0 {
                return Ok(p.clone());
            }
            // strictly below noise even after rounding
            let u = rng.gen::<f64>() * noise * (1.0 - 1e-9);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            Ok(Point::Real(space.shift_real(*x, sign * u)?))
        }
        (SpaceKind::Finite { distances }, Point::State { state }) => {
            let admissible: Vec<usize> = (0..distances.len()).filter(|&j| distances[*state][j] < noise).collect();
            if admissible.is_empty() {
                return Ok(p.clone());
            }
            Ok(Point::state(admissible[rng.gen_range(0..admissible.len())]))
        }
        (SpaceKind::Product { left, right }, Point::Pair(a, b)) => {
            Ok(Point::pair(random_displace(left, a, noise, rng)?, random_displace(right, b, noise, rng)?))
        }
        _ => space.check(p).map(|_| p.clone()),
    }
}

/// δ-pseudo-orbit obtained by displacing each image by a seeded uniform
/// offset of magnitude `< noise`.
pub fn perturb_orbit(family: &MapFamily, x0: &Point, horizon: usize, noise: f64, seed: u64) -> Result<PseudoOrbit> {
    if !(noise >= 0.0) {
        return Err(ShadowError::InvalidArgument(format!("noise {noise} must be nonnegative")));
    }
    let mut rng = seeded(seed);
    let mut points = vec![family.space_at(0)?.canonical(x0)];
    family.space_at(0)?.check(x0)?;
    for i in 0..horizon {
        let space = family.space_at(i + 1)?;
        let diameter = space.diameter();
        if noise > diameter {
            return Err(ShadowError::NoiseExceedsSpace { noise, diameter });
        }
        let image = family.evaluate(i, &points[i])?;
        points.push(random_displace(space, &image, noise, &mut rng)?);
    }
    PseudoOrbit::new(family, 0, points)
}

fn exact_displace(
    space: &StateSpace,
    p: &Point,
    size: f64,
    index: usize,
    rule: &Displacement,
    rng: &mut Option<ChaCha8Rng>,
) -> Result<Point> {
    if size == 0.0 {
        return Ok(p.clone());
    }
    let unavailable = || ShadowError::DisplacementUnavailable { index, size };
    match (&space.kind, p) {
        (SpaceKind::Circle | SpaceKind::Interval, Point::Real(x)) => {
            let sign = match (rule, rng.as_mut()) {
                (Displacement::Seeded { .. }, Some(r)) => {
                    if r.gen::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                _ => {
                    if index % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            if matches!(space.kind, SpaceKind::Circle) && size > 0.5 {
                return Err(unavailable());
            }
            Ok(Point::Real(space.shift_real(*x, sign * size)?))
        }
        (SpaceKind::Finite { distances }, Point::State { state }) => {
            if let Displacement::Partner { partner } = rule {
                let target = *partner.get(*state).ok_or_else(unavailable)?;
                if target >= distances.len() || (distances[*state][target] - size).abs() > DEFECT_TOL {
                    return Err(unavailable());
                }
                return Ok(Point::state(target));
            }
            let hits: Vec<usize> =
                (0..distances.len()).filter(|&j| (distances[*state][j] - size).abs() <= DEFECT_TOL).collect();
            if hits.is_empty() {
                return Err(unavailable());
            }
            let pick = match rng.as_mut() {
                Some(r) => hits[r.gen_range(0..hits.len())],
                None => hits[0],
            };
            Ok(Point::state(pick))
        }
        (SpaceKind::Product { left, right }, Point::Pair(a, b)) => Ok(Point::pair(
            exact_displace(left, a, size, index, rule, rng)?,
            exact_displace(right, b, size, index, rule, rng)?,
        )),
        _ => Err(unavailable()),
    }
}

/// Pseudo-orbit whose `i`-th image is displaced by exactly `defects[i]`
/// (so the realized defect sequence is the prescribed one, up to rounding
/// and interval clamping).
pub fn inject_defects(family: &MapFamily, x0: &Point, defects: &[f64], rule: &Displacement) -> Result<PseudoOrbit> {
    let mut rng = match rule {
        Displacement::Seeded { seed } => Some(seeded(*seed)),
        _ => None,
    };
    family.space_at(0)?.check(x0)?;
    let mut points = vec![family.space_at(0)?.canonical(x0)];
    for (i, &e) in defects.iter().enumerate() {
        if !(e >= 0.0) {
            return Err(ShadowError::InvalidArgument(format!("defect {e} at {i} is negative")));
        }
        let image = family.evaluate(i, &points[i])?;
        points.push(exact_displace(family.space_at(i + 1)?, &image, e, i, rule, &mut rng)?);
    }
    PseudoOrbit::new(family, 0, points)
}

/// Periodic extension of `x_0..x_{period-1}` to `horizon + 1` points.
pub fn periodicize(family: &MapFamily, po: &PseudoOrbit, period: usize, horizon: usize) -> Result<PseudoOrbit> {
    if !family.is_constant_space() {
        return Err(ShadowError::NonConstantSpaces);
    }
    if period == 0 || period > po.points.len() {
        return Err(ShadowError::InvalidArgument(format!(
            "period {period} must lie in 1..={}",
            po.points.len()
        )));
    }
    let points = (0..=horizon).map(|i| po.points[i % period].clone()).collect();
    PseudoOrbit::new(family, po.start_index, points)
}
