use proptest::prelude::*;
use shadowkit::builtins;
use shadowkit::product::{product_equivalence_check, CheckConfig, ShadowingVariant};
use shadowkit::pseudo_orbit::{perturb_orbit, PseudoOrbit};
use shadowkit::{MapFamily, Point};

fn split(points: &[Point]) -> (Vec<Point>, Vec<Point>) {
    points
        .iter()
        .map(|p| {
            let (a, b) = p.as_pair().unwrap();
            (a.clone(), b.clone())
        })
        .unzip()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn max_metric_identity_along_orbits(x in 0.0f64..1.0, y in 0.0f64..1.0, u in 0.0f64..1.0, v in 0.0f64..1.0, n in 0usize..30) {
        let (f, g) = (builtins::doubling(), builtins::rotations(&[0.2, 0.7]));
        let fg = MapFamily::product(&f, &g).unwrap();
        let start = Point::pair(Point::Real(x), Point::Real(y));
        let reference = Point::pair(Point::Real(u), Point::Real(v));
        let orbit = fg.compose(&start, n).unwrap();
        let (fx, gy) = (f.compose(&Point::Real(x), n).unwrap(), g.compose(&Point::Real(y), n).unwrap());
        let last = orbit.points.last().unwrap();
        let d = fg.space_at(n).unwrap().distance(last, &reference).unwrap();
        let d1 = f.space_at(n).unwrap().distance(fx.points.last().unwrap(), &Point::Real(u)).unwrap();
        let d2 = g.space_at(n).unwrap().distance(gy.points.last().unwrap(), &Point::Real(v)).unwrap();
        prop_assert_eq!(d, d1.max(d2));
        prop_assert_eq!(last, &Point::pair(fx.points[n].clone(), gy.points[n].clone()));
    }

    #[test]
    fn projections_of_pseudo_orbits(seed in any::<u64>(), x in 0.0f64..1.0, noise in 0.0f64..0.2, horizon in 1usize..60, s in 0usize..3) {
        let cases = [
            (builtins::doubling(), builtins::tent(), Point::pair(Point::Real(x), Point::Real(1.0 - x))),
            (builtins::cycle3(), builtins::swap_blocks4(), Point::pair(Point::state(s), Point::state(s + 1))),
            (builtins::tripling(), builtins::identity3(), Point::pair(Point::Real(x), Point::state(s))),
        ];
        for (f, g, start) in cases {
            let fg = MapFamily::product(&f, &g).unwrap();
            let po = perturb_orbit(&fg, &start, horizon, noise, seed).unwrap();
            let (left, right) = split(&po.points);
            let pf = PseudoOrbit::new(&f, 0, left).unwrap();
            let pg = PseudoOrbit::new(&g, 0, right).unwrap();
            for i in 0..horizon {
                prop_assert_eq!(po.defects[i], pf.defects[i].max(pg.defects[i]));
            }
            prop_assert!(pf.max_defect() <= po.max_defect() && pg.max_defect() <= po.max_defect());
        }
    }
}

#[test]
fn product_verdicts_match_factor_verdicts() {
    let families = [builtins::permutation3(), builtins::cycle3(), builtins::identity3(), builtins::swap_blocks4()];
    let configs = [(0.15, 0.05), (0.15, 0.5), (0.5, 0.1)];
    for (eps, delta) in configs {
        let cfg = CheckConfig { eps, delta, max_len: 5, ..Default::default() };
        for f in &families {
            for g in &families {
                for variant in ShadowingVariant::ALL {
                    let r = product_equivalence_check(f, g, variant, &cfg, delta, delta).unwrap();
                    let case = format!("{} x {} {variant} at ({eps}, {delta})", f.label, g.label);
                    // pairing a factor pseudo-orbit with a true orbit of the other factor
                    assert!(!r.product.pass || (r.factor_f.pass && r.factor_g.pass), "{case}");
                    if variant.theorem_backed() {
                        assert!(r.consistent, "{case}");
                    }
                }
            }
        }
    }
}
