use proptest::prelude::*;
use shadowkit::density::{
    cesaro_to_density_zero, density_zero_to_cesaro, dyadic_levels, patch_sets, upper_density, IndexSet, Menu,
};
use shadowkit::ShadowError;

fn in_menu(menu: &Menu, m: usize) -> bool {
    match menu {
        Menu::All => true,
        Menu::Arithmetic { step, offset, min } => m >= *min && m >= *offset && (m - offset) % step == 0,
        Menu::Listed { values } => values.contains(&m),
    }
}

/// Sparse index sets used as synthetic exceptional sets.
fn sparse(kind: u8, horizon: usize) -> IndexSet {
    match kind % 4 {
        0 => IndexSet::squares(horizon),
        1 => IndexSet::from_predicate(horizon, |n| n.is_power_of_two()),
        2 => IndexSet::from_predicate(horizon, |n| ((n as f64).cbrt().round() as usize).pow(3) == n),
        _ => IndexSet::multiples(97, horizon),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn patched_blocks_match_their_sources(
        horizon in 64usize..4096,
        strides in prop::collection::vec(1usize..6, 2..10),
        offsets in prop::collection::vec(0usize..64, 10),
        menu_steps in prop::collection::vec(1usize..40, 10),
    ) {
        // J_l: multiples of 2^{s_1 + … + s_l}, so densities decrease
        let mut shift = 0;
        let sets: Vec<IndexSet> = strides
            .iter()
            .map(|s| {
                shift += s;
                IndexSet::multiples(1 << shift.min(20), horizon)
            })
            .collect();
        let menus: Vec<Menu> = menu_steps
            .iter()
            .zip(&offsets)
            .map(|(&step, &offset)| Menu::Arithmetic { step, offset, min: 0 })
            .collect();
        let p = match patch_sets(&sets, &menus, horizon) {
            Ok(p) => p,
            Err(e) => {
                prop_assert!(matches!(e, ShadowError::MenuExhausted { level: 1 }), "{e}");
                return Ok(());
            }
        };
        let mask = p.set.mask();
        for (i, (w, &l)) in p.boundaries.windows(2).zip(&p.selectors).enumerate() {
            for n in w[0]..w[1] {
                prop_assert_eq!(mask[n], sets[l].contains(n), "block {} at {}", i + 1, n);
            }
        }
        let inner = &p.boundaries[1..p.boundaries.len() - 1];
        for (i, &m) in inner.iter().enumerate() {
            prop_assert!(in_menu(&menus[i], m), "m_{} = {} outside its menu", i + 1, m);
        }
        prop_assert!(p.boundaries.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn extraction_and_certificate_round_trip(kind in any::<u8>(), horizon in 200usize..8000, scale in 0.51f64..1.0, wobble in prop::collection::vec(0.5f64..1.0, 64)) {
        let support = sparse(kind, horizon);
        let a: Vec<f64> = (0..horizon)
            .map(|n| if support.contains(n) { scale * wobble[n % wobble.len()].max(0.51 / scale) } else { 0.0 })
            .collect();
        let ex = cesaro_to_density_zero(&a, &dyadic_levels(12)).unwrap();
        prop_assert_eq!(&ex.set, &support);
        let bound = a.iter().copied().fold(0.0, f64::max);
        let c = density_zero_to_cesaro(&a, &ex.set, bound, 0).unwrap();
        prop_assert!(c.final_actual() <= c.final_certificate());
        prop_assert!(c.final_certificate() <= 2.0 * c.final_actual() + 1e-15);
    }

    #[test]
    fn upper_density_is_an_exact_ratio(members in prop::collection::btree_set(0usize..5000, 0..300), at in 1usize..5000) {
        let set = IndexSet::new(5000, members.iter().copied());
        let count = members.iter().filter(|&&n| n < at).count();
        prop_assert_eq!(upper_density(&set, at).unwrap().to_bits(), (count as f64 / at as f64).to_bits());
    }
}

#[test]
fn certificate_covers_a_constant_tie() {
    // mean and certificate coincide exactly; summation rounding must not break the order
    let a: Vec<f64> = (0..3324).map(|n| if n % 97 == 0 { 0.51 } else { 0.0 }).collect();
    let set = IndexSet::multiples(97, a.len());
    let c = density_zero_to_cesaro(&a, &set, 0.51, 0).unwrap();
    assert!(c.actual.iter().zip(&c.certificates).all(|(m, c)| m <= c));
}
