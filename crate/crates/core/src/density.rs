//! Density-zero subsets of ℕ truncated to a finite horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShadowError};

/// Finite truncation of a subset of ℕ: the members below `horizon`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    pub horizon: usize,
    members: Vec<usize>,
}

impl IndexSet {
    pub fn empty(horizon: usize) -> Self {
        Self { horizon, members: Vec::new() }
    }

    /// Members at or past `horizon` are dropped; order and duplicates do not matter.
    pub fn new(horizon: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<usize> = members.into_iter().filter(|&m| m < horizon).collect();
        members.sort_unstable();
        members.dedup();
        Self { horizon, members }
    }

    pub fn from_predicate(horizon: usize, pred: impl Fn(usize) -> bool) -> Self {
        Self { horizon, members: (0..horizon).filter(|&n| pred(n)).collect() }
    }

    pub fn squares(horizon: usize) -> Self {
        Self { horizon, members: (0..).map(|k: usize| k * k).take_while(|&s| s < horizon).collect() }
    }

    pub fn multiples(step: usize, horizon: usize) -> Self {
        assert!(step > 0, "step must be positive");
        Self { horizon, members: (0..horizon).step_by(step).collect() }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.members.binary_search(&n).is_ok()
    }

    /// `#(J ∩ [0, at))`.
    pub fn count_below(&self, at: usize) -> usize {
        self.members.partition_point(|&m| m < at)
    }

    /// Indicator vector of length `horizon`.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.horizon];
        for &m in &self.members {
            mask[m] = true;
        }
        mask
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let horizon = self.horizon.min(other.horizon);
        IndexSet::new(horizon, self.members.iter().chain(other.members.iter()).copied())
    }
}

/// `#(J ∩ [0, at)) / at`, computed from exact integer counts.
pub fn upper_density(set: &IndexSet, at: usize) -> Result<f64> {
    if at == 0 {
        return Err(ShadowError::ZeroHorizon);
    }
    if at > set.horizon {
        return Err(ShadowError::InvalidArgument(format!("density requested at {at} past the horizon {}", set.horizon)));
    }
    Ok(set.count_below(at) as f64 / at as f64)
}

/// `2^{-k}` for `k = 1, 2, …, count`.
pub fn dyadic_levels(count: usize) -> Vec<f64> {
    (1..=count).map(|k| 0.5f64.powi(k as i32)).collect()
}

fn cesaro_means(a: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    a.iter()
        .enumerate()
        .map(|(i, &v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalSet {
    pub set: IndexSet,
    /// `N_0 = 0 < N_1 < …`; on `[N_k, N_{k+1})` the set is `{a_n > level_k}`.
    pub cuts: Vec<usize>,
    pub levels: Vec<f64>,
    pub density: f64,
    /// `sup_{n ∉ J, n ≥ N_k} a_n` for every cut.
    pub tail_sups: Vec<f64>,
}

/// Extracts a set `J` of small density off which `a_n` decays through `levels`.
///
/// The cut `N_{k+1}` is the least index past `N_k` from which the running
/// density of `{a_n > level_{k+1}}` stays at or below `level_{k+1}` up to the
/// horizon. Levels whose cut does not fit below the horizon are dropped.
pub fn cesaro_to_density_zero(a: &[f64], levels: &[f64]) -> Result<ExceptionalSet> {
    let horizon = a.len();
    if horizon == 0 {
        return Err(ShadowError::ZeroHorizon);
    }
    if levels.is_empty() || levels.windows(2).any(|w| w[1] > w[0]) || levels.iter().any(|&l| l <= 0.0) {
        return Err(ShadowError::InvalidArgument("levels must be positive and non-increasing".into()));
    }
    let final_mean = cesaro_means(a)[horizon - 1];
    if final_mean > levels[0] {
        return Err(ShadowError::NotCesaroNull { mean: final_mean, level: levels[0] });
    }

    let mut cuts = vec![0usize];
    for &level in &levels[1..] {
        let last = *cuts.last().unwrap();
        // suffix maximum of the running density of {a_n > level}
        let mut count = 0usize;
        let mut ratio = vec![0.0; horizon + 1];
        for (n, &v) in a.iter().enumerate() {
            if v > level {
                count += 1;
            }
            ratio[n + 1] = count as f64 / (n + 1) as f64;
        }
        let mut suffix = 0.0f64;
        let mut first_ok = None;
        for k in (last + 1..=horizon).rev() {
            suffix = suffix.max(ratio[k]);
            if suffix <= level {
                first_ok = Some(k);
            }
        }
        match first_ok {
            Some(k) if k < horizon => cuts.push(k),
            _ => break,
        }
    }
    let used = cuts.len();
    let levels = levels[..used].to_vec();

    let mut members = Vec::new();
    for (k, &start) in cuts.iter().enumerate() {
        let end = cuts.get(k + 1).copied().unwrap_or(horizon);
        members.extend((start..end).filter(|&n| a[n] > levels[k]));
    }
    let set = IndexSet { horizon, members };
    let mask = set.mask();
    let tail_sups = cuts
        .iter()
        .map(|&c| (c..horizon).filter(|&n| !mask[n]).map(|n| a[n]).fold(0.0, f64::max))
        .collect();
    let density = upper_density(&set, horizon)?;
    Ok(ExceptionalSet { set, cuts, levels, density, tail_sups })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroCertificate {
    pub cut: usize,
    /// `s(N) = sup_{n ∉ J, n ≥ N} a_n`.
    pub tail_sup: f64,
    /// `M·dens(J, n) + s(N) + M·N/n` for `n = 1..=horizon`.
    pub certificates: Vec<f64>,
    /// `(1/n) Σ_{i<n} a_i` for `n = 1..=horizon`.
    pub actual: Vec<f64>,
}

impl CesaroCertificate {
    pub fn final_certificate(&self) -> f64 {
        *self.certificates.last().unwrap()
    }

    pub fn final_actual(&self) -> f64 {
        *self.actual.last().unwrap()
    }
}

/// Bounds the Cesàro means of `a` by splitting the sum at `cut` and over `J`.
pub fn density_zero_to_cesaro(a: &[f64], set: &IndexSet, bound: f64, cut: usize) -> Result<CesaroCertificate> {
    let horizon = a.len();
    if horizon == 0 {
        return Err(ShadowError::ZeroHorizon);
    }
    if set.horizon < horizon {
        return Err(ShadowError::InvalidArgument(format!("set horizon {} is shorter than the sequence", set.horizon)));
    }
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, &v)| v > bound || v < 0.0) {
        return Err(ShadowError::BoundViolated { index, value, bound });
    }
    let mask = set.mask();
    let tail_sup = (cut.min(horizon)..horizon).filter(|&n| !mask[n]).map(|n| a[n]).fold(0.0, f64::max);
    let certificates: Vec<f64> = (1..=horizon)
        .map(|n| {
            let dens = set.count_below(n) as f64 / n as f64;
            // rounded up by the error of summing n terms
            (bound * dens + tail_sup + bound * (cut.min(n) as f64) / n as f64) * (1.0 + (n + 4) as f64 * f64::EPSILON)
        })
        .collect();
    let actual = cesaro_means(a);
    for (i, (&c, &m)) in certificates.iter().zip(&actual).enumerate() {
        assert!(m <= c, "Cesàro mean {m} exceeds certificate {c} at n = {}", i + 1);
    }
    Ok(CesaroCertificate { cut, tail_sup, certificates, actual })
}

/// An infinite subset of ℕ from which patch boundaries are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "menu", rename_all = "snake_case")]
pub enum Menu {
    All,
    /// `{offset + j·step : j ≥ 0} ∩ [min, ∞)`.
    Arithmetic { step: usize, offset: usize, min: usize },
    /// A finite listing standing in for an infinite set.
    Listed { values: Vec<usize> },
}

impl Menu {
    /// Least element strictly above `after` and at least `at_least`, below `limit`.
    fn first_from(&self, after: usize, at_least: usize, limit: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
        let lo = at_least.max(after + 1);
        match self {
            Menu::All => (lo..limit).find(|&m| ok(m)),
            Menu::Arithmetic { step, offset, min } => {
                let lo = lo.max(*min).max(*offset);
                let first = offset + (lo - offset).div_ceil(*step) * step;
                (first..limit).step_by(*step).find(|&m| ok(m))
            }
            Menu::Listed { values } => {
                let mut v: Vec<usize> = values.iter().copied().filter(|&m| m >= lo && m < limit).collect();
                v.sort_unstable();
                v.into_iter().find(|&m| ok(m))
            }
        }
    }

    fn has_candidate(&self, after: usize, limit: usize) -> bool {
        self.first_from(after, 0, limit, |_| true).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchedSet {
    pub set: IndexSet,
    /// `m_0 = 0 < m_1 < …`, with the last entry equal to the horizon.
    pub boundaries: Vec<usize>,
    /// `l_i` for block `i = 1, 2, …`: `J ∩ [m_{i-1}, m_i) = J_{l_i} ∩ [m_{i-1}, m_i)`.
    pub selectors: Vec<usize>,
    pub density: f64,
}

impl PatchedSet {
    /// Exhaustive check of the block identity against the input sets.
    pub fn verify_blocks(&self, sets: &[IndexSet]) -> bool {
        let mask = self.set.mask();
        self.boundaries.windows(2).zip(&self.selectors).all(|(w, &l)| (w[0]..w[1]).all(|n| mask[n] == sets[l].contains(n)))
    }
}

fn suffix_max_density(set: &IndexSet, horizon: usize) -> Vec<f64> {
    let mut out = vec![0.0; horizon + 1];
    let mut running = 0.0f64;
    for k in (1..=horizon).rev() {
        running = running.max(set.count_below(k) as f64 / k as f64);
        out[k] = running;
    }
    out[0] = running;
    out
}

/// Glues the sets `J_{l_i}` along boundaries `m_i ∈ R_i` into one set of small density.
///
/// `l_i` is the least index past `l_{i-1}` (and at least `i`) whose set has
/// density at most `2^{-i}` at the horizon. `m_i` is the least menu element
/// past `m_{i-1}` after which the next selected set keeps running density at
/// most `2^{-i}`. When the sets or the menus run out the last block is closed
/// at the horizon.
pub fn patch_sets(sets: &[IndexSet], menus: &[Menu], horizon: usize) -> Result<PatchedSet> {
    patch_sets_with(sets, menus, horizon, Selection::ByDensity)
}

/// How the selectors `l_i` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Least admissible index by density at the horizon.
    ByDensity,
    /// `l_i = i`, for inputs known to be density zero.
    Identity,
}

pub fn patch_sets_with(sets: &[IndexSet], menus: &[Menu], horizon: usize, selection: Selection) -> Result<PatchedSet> {
    if horizon == 0 {
        return Err(ShadowError::ZeroHorizon);
    }
    if sets.is_empty() {
        return Err(ShadowError::InvalidArgument("no sets to patch".into()));
    }
    if let Some(s) = sets.iter().find(|s| s.horizon < horizon) {
        return Err(ShadowError::InvalidArgument(format!("set horizon {} is shorter than {horizon}", s.horizon)));
    }
    let level = |i: usize| 0.5f64.powi(i as i32);
    let density_at_horizon = |l: usize| sets[l].count_below(horizon) as f64 / horizon as f64;
    let select = |i: usize, prev: Option<usize>| -> Option<usize> {
        let lo = prev.map_or(i, |p| (p + 1).max(i));
        match selection {
            Selection::ByDensity => (lo..sets.len()).find(|&l| density_at_horizon(l) <= level(i)),
            Selection::Identity => (i < sets.len()).then_some(i),
        }
    };

    let mut selectors = vec![select(1, None).unwrap_or(sets.len() - 1)];
    let mut boundaries = vec![0usize];
    for i in 1.. {
        let prev_m = *boundaries.last().unwrap();
        let menu = menus.get(i - 1);
        if i == 1 && !menu.is_some_and(|m| m.has_candidate(prev_m, horizon)) {
            return Err(ShadowError::MenuExhausted { level: 1 });
        }
        let next = select(i + 1, Some(selectors[i - 1]));
        let (Some(menu), Some(next)) = (menu, next) else { break };
        let suffix = suffix_max_density(&sets[next], horizon);
        match menu.first_from(prev_m, 1, horizon, |m| suffix[m] <= level(i)) {
            Some(m) => {
                boundaries.push(m);
                selectors.push(next);
            }
            None => break,
        }
    }
    boundaries.push(horizon);

    let mut members = Vec::new();
    for (w, &l) in boundaries.windows(2).zip(&selectors) {
        members.extend(sets[l].members().iter().copied().filter(|&n| n >= w[0] && n < w[1]));
    }
    let set = IndexSet { horizon, members };
    let density = upper_density(&set, horizon)?;
    Ok(PatchedSet { set, boundaries, selectors, density })
}

/// Block structure of the complement of a patched set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub boundaries: Vec<usize>,
    pub selectors: Vec<usize>,
    /// Maximal runs `[a_i, b_i]` of consecutive integers outside the set.
    pub blocks: Vec<(usize, usize)>,
    /// `B = {b_i}`.
    pub fill_markers: IndexSet,
}

impl BlockDecomposition {
    pub fn new(patched: &PatchedSet) -> Self {
        let blocks = complement_runs(&patched.set);
        let fill_markers = IndexSet::new(patched.set.horizon, blocks.iter().map(|&(_, b)| b));
        Self { boundaries: patched.boundaries.clone(), selectors: patched.selectors.clone(), blocks, fill_markers }
    }
}

/// Maximal runs of consecutive integers in `[0, horizon) ∖ J`.
pub fn complement_runs(set: &IndexSet) -> Vec<(usize, usize)> {
    let mask = set.mask();
    let mut runs = Vec::new();
    let mut start = None;
    for (n, &inside) in mask.iter().enumerate() {
        match (inside, start) {
            (false, None) => start = Some(n),
            (true, Some(a)) => {
                runs.push((a, n - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        runs.push((a, set.horizon - 1));
    }
    runs
}
