use proptest::prelude::*;
use shadowkit::builtins;
use shadowkit::space::SpaceKind;
use shadowkit::{MapFamily, Point, StateSpace};

fn spaces() -> Vec<StateSpace> {
    vec![
        StateSpace::circle(),
        StateSpace::interval(),
        builtins::cycle3().space_at(0).unwrap().clone(),
        builtins::swap_blocks4().space_at(0).unwrap().clone(),
        StateSpace::product(StateSpace::circle(), StateSpace::discrete(3, 0.2)),
    ]
}

/// Deterministic point of `space` from coordinates in `[0, 1)`.
fn point_in(space: &StateSpace, u: f64, v: f64) -> Point {
    match (&space.kind, space.finite_len()) {
        (SpaceKind::Product { left, right }, _) => Point::pair(point_in(left, u, v), point_in(right, v, u)),
        (_, Some(n)) => Point::state(((u * n as f64) as usize).min(n - 1)),
        _ => Point::Real(u),
    }
}

fn expanding() -> Vec<MapFamily> {
    vec![
        builtins::doubling(),
        builtins::tripling(),
        builtins::alternating(),
        builtins::harmonic_skew(),
        builtins::dyadic_skew(),
        builtins::tent(),
        MapFamily::product(&builtins::doubling(), &builtins::tripling()).unwrap(),
    ]
}

/// `w` moved by `a` (first coordinate) and `b` (second coordinate).
fn near(space: &StateSpace, w: &Point, a: f64, b: f64) -> Point {
    match (w, &space.kind) {
        (Point::Pair(l, r), SpaceKind::Product { left, right }) => Point::pair(near(left, l, a, b), near(right, r, b, a)),
        (Point::Real(x), _) => Point::Real(space.shift_real(*x, a).unwrap()),
        _ => w.clone(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn metric_axioms(u in 0.0f64..1.0, v in 0.0f64..1.0, w in 0.0f64..1.0, s in 0.0f64..1.0) {
        for space in spaces() {
            let (x, y, z) = (point_in(&space, u, s), point_in(&space, v, 1.0 - s), point_in(&space, w, s * s));
            let dxy = space.distance(&x, &y).unwrap();
            let dyx = space.distance(&y, &x).unwrap();
            let dxz = space.distance(&x, &z).unwrap();
            let dyz = space.distance(&y, &z).unwrap();
            prop_assert!(dxy >= 0.0);
            prop_assert_eq!(space.distance(&x, &x).unwrap(), 0.0);
            prop_assert!((dxy - dyx).abs() <= 1e-12);
            prop_assert!(dxz <= dxy + dyz + 1e-12);
            if dxy == 0.0 {
                prop_assert_eq!(space.canonical(&x), space.canonical(&y));
            }
        }
    }

    #[test]
    fn inverse_branches_contract_and_round_trip(
        n in 0usize..64,
        z in 0.0f64..1.0,
        a in -0.99f64..0.99,
        b in -0.99f64..0.99,
        zs in 0.0f64..1.0,
    ) {
        for family in expanding() {
            let space = family.space_at(n).unwrap();
            let z = point_in(space, z, zs);
            let w = family.evaluate(n, &z).unwrap();
            let branch = family.branch_containing(n, &z).unwrap();
            let radius = family.inverse_branch_radius.unwrap();
            let target = family.space_at(n + 1).unwrap();
            let y1 = near(target, &w, a * radius, b * radius);
            let y2 = near(target, &w, b * radius, a * radius);
            if target.distance(&w, &y1).unwrap() >= radius || target.distance(&w, &y2).unwrap() >= radius {
                continue;
            }
            let p1 = family.inverse_branch(n, &w, branch, &y1).unwrap();
            let p2 = family.inverse_branch(n, &w, branch, &y2).unwrap();
            let lambda = family.rate_at(n).unwrap().unwrap();
            let lhs = space.distance(&p1, &p2).unwrap();
            let rhs = lambda * target.distance(&y1, &y2).unwrap();
            prop_assert!(lhs <= rhs + 1e-12, "{}: {lhs} > {rhs}", family.label);
            // the stored preimage is rounded; f_n stretches that by its steepest slope
            let steepest = (1.0 / lambda).max(1.0 / (1.0 - lambda));
            let tol = 1e-10 + 8.0 * f64::EPSILON * steepest;
            prop_assert!(target.distance(&family.evaluate(n, &p1).unwrap(), &y1).unwrap() <= tol);
            prop_assert!(target.distance(&family.evaluate(n, &p2).unwrap(), &y2).unwrap() <= tol);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn compose_concatenates_exactly(x in 0.0f64..1.0, n in 0usize..40, m in 0usize..40) {
        for family in [builtins::doubling(), builtins::alternating(), builtins::tent(), builtins::rotations(&[0.1, 0.37])] {
            let whole = family.compose(&Point::Real(x), n + m).unwrap();
            let head = family.compose(&Point::Real(x), n).unwrap();
            let tail = family.orbit_from(n, head.points.last().unwrap(), m).unwrap();
            let mut joined = head.points.clone();
            joined.extend(tail.points.into_iter().skip(1));
            prop_assert_eq!(whole.points, joined);
        }
    }

    #[test]
    fn finite_orbits_concatenate(s in 0usize..12, n in 0usize..20, m in 0usize..20) {
        let fg = MapFamily::product(&builtins::permutation3(), &builtins::swap_blocks4()).unwrap();
        let x = fg.space_at(0).unwrap().enumerate().unwrap()[s].clone();
        let whole = fg.compose(&x, n + m).unwrap();
        let tail = fg.orbit_from(n, &whole.points[n], m).unwrap();
        prop_assert_eq!(&whole.points[n..], &tail.points[..]);
    }
}
