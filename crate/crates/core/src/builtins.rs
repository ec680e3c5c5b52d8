//! Built-in families used throughout the tests and the bundled scenarios.

use crate::error::Result;
use crate::family::{MapFamily, MapKind, Schedule, Steps};
use crate::space::StateSpace;

/// Inverse-branch radius shared by the expanding circle families.
pub const CIRCLE_BRANCH_RADIUS: f64 = 0.25;

fn circle_family(label: &str, maps: Vec<MapKind>) -> MapFamily {
    MapFamily::listed(label, Schedule::constant(StateSpace::circle()), Schedule::periodic(maps), Some(CIRCLE_BRANCH_RADIUS))
        .expect("built-in circle family is valid")
}

/// `f_n(x) = 2x mod 1`, `λ ≡ 1/2`, `δ₀ = 1/4`.
pub fn doubling() -> MapFamily {
    circle_family("doubling", vec![MapKind::Multiply { factor: 2 }])
}

/// `f_n(x) = 3x mod 1`, `λ ≡ 1/3`.
pub fn tripling() -> MapFamily {
    circle_family("tripling", vec![MapKind::Multiply { factor: 3 }])
}

/// `2x mod 1` at even times, `3x mod 1` at odd times.
pub fn alternating() -> MapFamily {
    circle_family("alternating 2x/3x", vec![MapKind::Multiply { factor: 2 }, MapKind::Multiply { factor: 3 }])
}

/// Slowly expanding family with `λ_i = i/(i+1)`.
pub fn harmonic_skew() -> MapFamily {
    MapFamily {
        label: "harmonic skew (λ_i = i/(i+1))".into(),
        spaces: Schedule::constant(StateSpace::circle()),
        steps: Steps::HarmonicSkew,
        inverse_branch_radius: Some(CIRCLE_BRANCH_RADIUS),
    }
}

/// Negative control with `λ_i = 1 - 2^{-i}`, whose product stays positive.
pub fn dyadic_skew() -> MapFamily {
    MapFamily {
        label: "dyadic skew (λ_i = 1 - 2^-i)".into(),
        spaces: Schedule::constant(StateSpace::circle()),
        steps: Steps::DyadicSkew,
        inverse_branch_radius: Some(CIRCLE_BRANCH_RADIUS),
    }
}

/// Tent map on `[0,1]`, `λ ≡ 1/2`.
pub fn tent() -> MapFamily {
    MapFamily::listed("tent", Schedule::constant(StateSpace::interval()), Schedule::constant(MapKind::Tent), Some(CIRCLE_BRANCH_RADIUS))
        .expect("tent family is valid")
}

pub fn identity_circle() -> MapFamily {
    MapFamily::listed("identity", Schedule::constant(StateSpace::circle()), Schedule::constant(MapKind::Identity), None)
        .expect("identity family is valid")
}

/// Rotations `r_n(x) = x + α_n`, the angle list repeated periodically.
pub fn rotations(alphas: &[f64]) -> MapFamily {
    let maps = alphas.iter().map(|&alpha| MapKind::Rotation { alpha }).collect();
    MapFamily::listed("rotations", Schedule::constant(StateSpace::circle()), Schedule::periodic(maps), None)
        .expect("rotation family is valid")
}

/// Family of finite-space maps given by image tables, repeated periodically.
pub fn finite_family(label: &str, space: StateSpace, tables: Vec<Vec<usize>>) -> Result<MapFamily> {
    let maps = tables.into_iter().map(|image| MapKind::Table { image }).collect();
    MapFamily::listed(label, Schedule::constant(space), Schedule::periodic(maps), None)
}

/// Three points at mutual distance 1, cyclic permutation `p0 -> p1 -> p2 -> p0`.
pub fn permutation3() -> MapFamily {
    finite_family("3-cycle", StateSpace::discrete(3, 1.0), vec![vec![1, 2, 0]]).expect("valid")
}

/// Three points on a line with spacing 0.2, cyclically permuted.
pub fn cycle3() -> MapFamily {
    let d = |i: usize, j: usize| 0.2 * (i as f64 - j as f64).abs();
    let distances = (0..3).map(|i| (0..3).map(|j| d(i, j)).collect()).collect();
    let space = StateSpace::finite(distances, "3 points on a line (spacing 0.2)").expect("valid metric");
    finite_family("line 3-cycle", space, vec![vec![1, 2, 0]]).expect("valid")
}

/// Identity on three points at mutual distance 0.2.
pub fn identity3() -> MapFamily {
    finite_family("identity on 3 points", StateSpace::discrete(3, 0.2), vec![vec![0, 1, 2]]).expect("valid")
}

/// Four points in two clusters `{0,1}`, `{2,3}` (distance 0.1 inside a
/// cluster, 1 across); the map swaps the points of each cluster.
pub fn swap_blocks4() -> MapFamily {
    let d = |i: usize, j: usize| {
        if i == j {
            0.0
        } else if i / 2 == j / 2 {
            0.1
        } else {
            1.0
        }
    };
    let distances = (0..4).map(|i| (0..4).map(|j| d(i, j)).collect()).collect();
    let space = StateSpace::finite(distances, "two 2-point clusters").expect("valid metric");
    finite_family("cluster swap", space, vec![vec![1, 0, 3, 2]]).expect("valid")
}

/// Eight states at mutual distance 1. States `0 -> 1 -> 2 -> 0` form the
/// invariant cycle `A`; states 3, 4, 5 are shadows of 0, 1, 2 (same image);
/// 6 and 7 fall into the shadows. Every state enters `A` within two steps.
pub fn attractor8() -> MapFamily {
    MapFamily::listed_non_onto(
        "8-state attractor",
        Schedule::constant(StateSpace::discrete(8, 1.0)),
        Schedule::constant(MapKind::Table { image: vec![1, 2, 0, 1, 2, 0, 3, 4] }),
    )
    .expect("valid")
}

/// Partner table for [`attractor8`]: each cycle state is displaced to its
/// shadow, which lands back in phase.
pub fn attractor8_partner() -> Vec<usize> {
    vec![3, 4, 5, 0, 1, 2, 6, 7]
}

pub fn attractor8_cycle() -> Vec<usize> {
    vec![0, 1, 2]
}
