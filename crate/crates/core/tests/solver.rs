use proptest::prelude::*;
use shadowkit::builtins;
use shadowkit::pseudo_orbit::{inject_defects, Displacement, PseudoOrbit};
use shadowkit::solver::{delta_budget, pullback_shadow, uniqueness_certificate, DEFAULT_MARGIN};
use shadowkit::{MapFamily, Point};

/// Built-in expanding families whose rate products vanish.
fn vanishing_product_families() -> Vec<MapFamily> {
    vec![
        builtins::doubling(),
        builtins::tripling(),
        builtins::alternating(),
        builtins::harmonic_skew(),
        builtins::tent(),
        MapFamily::product(&builtins::doubling(), &builtins::tripling()).unwrap(),
    ]
}

fn start(family: &MapFamily, u: f64) -> Point {
    match family.space_at(0).unwrap().kind {
        shadowkit::space::SpaceKind::Product { .. } => Point::pair(Point::Real(u), Point::Real(1.0 - u)),
        _ => Point::Real(u),
    }
}

/// Pseudo-orbit whose defect `j` is `frac_j` of the budget for `f_j`.
fn budget_orbit(family: &MapFamily, x0: &Point, eps: f64, fracs: &[f64], seed: u64) -> PseudoOrbit {
    let rates: Vec<f64> = (0..fracs.len()).map(|j| family.rate_at(j).unwrap().unwrap()).collect();
    let budget = delta_budget(&rates, eps, DEFAULT_MARGIN, family.inverse_branch_radius.unwrap()).unwrap();
    let defects: Vec<f64> = budget.iter().zip(fracs).map(|(b, f)| b * f * 0.999).collect();
    inject_defects(family, x0, &defects, &Displacement::Seeded { seed }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn budget_orbits_are_shadowed(
        seed in any::<u64>(),
        u in 0.0f64..1.0,
        eps in 0.01f64..0.12,
        fracs in prop::collection::vec(0.0f64..1.0, 1..=256),
    ) {
        for family in vanishing_product_families() {
            let po = budget_orbit(&family, &start(&family, u), eps, &fracs, seed);
            let (report, chain) = pullback_shadow(&family, &po, eps).unwrap();
            prop_assert!(report.verdict, "{}", family.label);
            prop_assert!(report.max_error() < eps);
            prop_assert!(report.cell_diameter <= report.diameter_bound * (1.0 + 1e-12));
            // the chain is a true orbit up to rounding
            for j in 0..po.horizon() {
                let image = family.evaluate(j, &chain.chain[j]).unwrap();
                let err = family.space_at(j + 1).unwrap().distance(&image, &chain.chain[j + 1]).unwrap();
                prop_assert!(err <= 1e-9, "{}: step {j} off by {err}", family.label);
            }
        }
    }

    #[test]
    fn cells_nest_and_obey_the_diameter_bound(
        seed in any::<u64>(),
        u in 0.0f64..1.0,
        fracs in prop::collection::vec(0.0f64..1.0, 2..64),
    ) {
        let eps = 0.1;
        for family in [builtins::doubling(), builtins::alternating(), builtins::harmonic_skew()] {
            let po = budget_orbit(&family, &Point::Real(u), eps, &fracs, seed);
            let space = family.space_at(0).unwrap();
            let mut previous: Option<(Point, f64)> = None;
            for k in 1..=po.horizon() {
                let (report, chain) = pullback_shadow(&family, &po.truncated(k), eps).unwrap();
                let cell = &chain.cells[0];
                prop_assert!(2.0 * cell.radius <= report.diameter_bound * (1.0 + 1e-12));
                if let Some((c, r)) = &previous {
                    let gap = space.distance(&cell.center, c).unwrap();
                    prop_assert!(gap + cell.radius <= r + 1e-12, "k = {k}: cell leaves its predecessor");
                }
                previous = Some((cell.center.clone(), cell.radius));
            }
        }
    }
}

#[test]
fn positive_rate_product_keeps_a_fat_cell() {
    let family = builtins::dyadic_skew();
    let eps = 0.1;
    let po = PseudoOrbit::true_orbit(&family, &Point::Real(0.3), 40).unwrap();
    let mut product = 1.0;
    for k in 1..=40 {
        product *= 1.0 - 0.5f64.powi(k as i32);
        let c = uniqueness_certificate(&family, &po, eps, k).unwrap();
        assert!(c >= 0.2 * 2.0 * eps * product, "k = {k}: {c}");
    }
}
