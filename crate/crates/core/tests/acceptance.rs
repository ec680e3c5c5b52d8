//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so every line is printed; exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use shadowkit::average::{average_shadow_point, lift_to_a, InvariantSubsystem};
use shadowkit::builtins;
use shadowkit::cli::{run_suite, scenario_files, Overrides};
use shadowkit::density::{cesaro_to_density_zero, density_zero_to_cesaro, dyadic_levels, patch_sets, IndexSet, Menu};
use shadowkit::limit::{limit_shadow_point, IsometryTransport, LimitConfig};
use shadowkit::product::{product_equivalence_check, CheckConfig, ShadowingVariant};
use shadowkit::pseudo_orbit::{inject_defects, perturb_orbit, periodicize, Displacement, PseudoOrbit};
use shadowkit::solver::{budget_for, periodic_shadow, pullback_shadow, uniqueness_certificate, DEFAULT_MARGIN};
use shadowkit::{MapFamily, Point};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn shadowing_bound() -> Result<String, String> {
    let f = builtins::doubling();
    let eps = 0.1;
    let clock = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let x0 = Point::Real((seed as f64 * 0.618_033_988_749_894_9).fract());
        let probe = PseudoOrbit::true_orbit(&f, &x0, 64).map_err(|e| e.to_string())?;
        let budget = budget_for(&f, &probe, eps, DEFAULT_MARGIN).map_err(|e| e.to_string())?;
        ensure(budget.iter().all(|&d| (d - 0.049).abs() < 1e-15), || format!("budget {:?} is not 0.049", budget[0]))?;
        let po = perturb_orbit(&f, &x0, 64, 0.049, seed).map_err(|e| e.to_string())?;
        let (report, _) = pullback_shadow(&f, &po, eps).map_err(|e| e.to_string())?;
        ensure(report.verdict && report.max_error() < eps, || format!("seed {seed}: max error {}", report.max_error()))?;
        worst = worst.max(report.max_error());
    }
    let elapsed = clock.elapsed().as_secs_f64();
    ensure(elapsed < 1.0, || format!("runtime {elapsed:.3} s"))?;
    Ok(format!("worst max error {worst:.4} < 0.1 over 100 seeds in {elapsed:.3} s"))
}

fn uniqueness_decay() -> Result<String, String> {
    let eps = 0.1;
    let x0 = Point::Real(0.3);
    let dbl = builtins::doubling();
    let po = PseudoOrbit::true_orbit(&dbl, &x0, 30).map_err(|e| e.to_string())?;
    for k in 1..=30 {
        let c = uniqueness_certificate(&dbl, &po, eps, k).map_err(|e| e.to_string())?;
        ensure(c == 2.0 * eps * 0.5f64.powi(k as i32), || format!("doubling k = {k}: {c}"))?;
    }
    let harmonic = builtins::harmonic_skew();
    let po = PseudoOrbit::true_orbit(&harmonic, &x0, 30).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 1..=30 {
        let c = uniqueness_certificate(&harmonic, &po, eps, k).map_err(|e| e.to_string())?;
        // ∏_{i=1}^k i/(i+1) telescopes to 1/(k+1)
        let oracle = 2.0 * eps / (k + 1) as f64;
        worst = worst.max((c - oracle).abs());
        ensure((c - oracle).abs() <= 1e-12, || format!("harmonic k = {k}: {c} vs {oracle}"))?;
    }
    let dyadic = builtins::dyadic_skew();
    let po = PseudoOrbit::true_orbit(&dyadic, &x0, 50).map_err(|e| e.to_string())?;
    let mut product = 1.0;
    let mut floor = f64::INFINITY;
    for k in 1..=50 {
        product *= 1.0 - 0.5f64.powi(k as i32);
        let c = uniqueness_certificate(&dyadic, &po, eps, k).map_err(|e| e.to_string())?;
        ensure(c > 0.2 * 2.0 * eps * product, || format!("dyadic k = {k}: {c}"))?;
        floor = floor.min(c);
    }
    Ok(format!("exact dyadic decay; harmonic within {worst:.1e}; dyadic control stays ≥ {floor:.4}"))
}

/// Grid point `i · 1e-6` minimizing `max_n d(F_n(g), x_n)`, with pruning on
/// the running maximum.
fn grid_minimizer(f: &MapFamily, po: &PseudoOrbit, eps: f64) -> (f64, f64) {
    let xs: Vec<f64> = po.points.iter().map(|p| p.as_real().unwrap()).collect();
    let mut best = (f64::NAN, eps);
    for i in 0..1_000_000u32 {
        let mut y = Point::Real(i as f64 * 1e-6);
        let mut err = 0.0f64;
        for (n, &x) in xs.iter().enumerate() {
            if n > 0 {
                y = f.evaluate(n - 1, &y).unwrap();
            }
            err = err.max(circle_distance(y.as_real().unwrap(), x));
            if err >= best.1 {
                break;
            }
        }
        if err < best.1 {
            best = (i as f64 * 1e-6, err);
        }
    }
    best
}

fn oracle_agreement() -> Result<String, String> {
    let f = builtins::doubling();
    let eps = 0.1;
    let clock = Instant::now();
    let mut worst_ratio = 0.0f64;
    for seed in 0..10u64 {
        let x0 = Point::Real(0.1 + 0.08 * seed as f64);
        let po = perturb_orbit(&f, &x0, 16, 0.049, 1000 + seed).map_err(|e| e.to_string())?;
        let (report, _) = pullback_shadow(&f, &po, eps).map_err(|e| e.to_string())?;
        let (g, err) = grid_minimizer(&f, &po, eps);
        ensure(!g.is_nan(), || format!("seed {seed}: no grid point shadows (best {err})"))?;
        let d = circle_distance(report.shadow_point.as_real().unwrap(), g);
        ensure(d <= report.diameter_bound + 1e-12, || format!("seed {seed}: distance {d:.3e} > certificate {:.3e}", report.diameter_bound))?;
        worst_ratio = worst_ratio.max(d / report.diameter_bound);
    }
    let elapsed = clock.elapsed().as_secs_f64();
    ensure(elapsed < 30.0, || format!("runtime {elapsed:.1} s"))?;
    Ok(format!("solver within {worst_ratio:.2} × certificate of the grid minimizer, {elapsed:.1} s"))
}

fn periodic() -> Result<String, String> {
    let f = builtins::doubling();
    let cycle = PseudoOrbit::new(&f, 0, vec![Point::Real(0.335), Point::Real(0.664), Point::Real(0.335)]).map_err(|e| e.to_string())?;
    ensure(cycle.max_defect() < 0.01, || format!("defect {} is not below δ = 0.01", cycle.max_defect()))?;
    let po = periodicize(&f, &cycle, 2, 16).map_err(|e| e.to_string())?;
    let r = periodic_shadow(&f, &po, 2, 0.05).map_err(|e| e.to_string())?;
    let x = r.point.as_real().unwrap();
    let f2 = f.compose(&r.point, 2).map_err(|e| e.to_string())?.points[2].as_real().unwrap();
    let gap = circle_distance(f2, x);
    ensure(gap < 1e-9, || format!("|F_2(x) - x| = {gap:.2e}"))?;
    ensure(circle_distance(x, 1.0 / 3.0) < 0.05, || format!("x = {x}"))?;
    Ok(format!("x = {x:.12}, |F_2(x) - x| = {gap:.1e}"))
}

fn squares(horizon: usize) -> Vec<f64> {
    // independent square test: integer square root by search
    (0..horizon)
        .map(|n| {
            let r = (0..=n).take_while(|r| r * r <= n).last().unwrap_or(0);
            if r * r == n {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

fn density_equivalence() -> Result<String, String> {
    let a = squares(10_000);
    let ex = cesaro_to_density_zero(&a, &dyadic_levels(16)).map_err(|e| e.to_string())?;
    ensure(ex.set.len() == 100 && ex.density == 0.01, || format!("J has {} members, density {}", ex.set.len(), ex.density))?;
    let mask = ex.set.mask();
    ensure((0..a.len()).all(|n| mask[n] || a[n] == 0.0), || "nonzero value outside J".into())?;
    let c = density_zero_to_cesaro(&a, &ex.set, 1.0, 0).map_err(|e| e.to_string())?;
    ensure(c.final_actual() == 0.01 && c.final_actual() <= c.final_certificate(), || {
        format!("certificate {} vs actual {}", c.final_certificate(), c.final_actual())
    })?;
    let doubled = cesaro_to_density_zero(&squares(20_000), &dyadic_levels(16)).map_err(|e| e.to_string())?;
    let ratio = doubled.density / ex.density;
    ensure((ratio - 0.5).abs() <= 0.05, || {
        format!(
            "J density 0.01, certificate {} ≥ mean 0.01, but doubling gives {} (ratio {ratio:.4}, not 0.5 ± 10%)",
            c.final_certificate(),
            doubled.density
        )
    })?;
    Ok(format!("density 0.01, certificate {}, doubling ratio {ratio:.4}", c.final_certificate()))
}

fn patching() -> Result<String, String> {
    let horizon = 1 << 14;
    let sets: Vec<IndexSet> = (0..14).map(|i| IndexSet::multiples(1 << (i + 1), horizon)).collect();
    // R_i: indices m with m + 1 divisible by 2^{i+1}
    let menus: Vec<Menu> = (0..14).map(|i| Menu::Arithmetic { step: 1 << (i + 1), offset: (1 << (i + 1)) - 1, min: 0 }).collect();
    let p = patch_sets(&sets, &menus, horizon).map_err(|e| e.to_string())?;
    let mask = p.set.mask();
    for (i, (w, &l)) in p.boundaries.windows(2).zip(&p.selectors).enumerate() {
        for n in w[0]..w[1] {
            let in_source = n % (1 << (l + 1)) == 0;
            ensure(mask[n] == in_source, || format!("block {} differs from J_{l} at {n}", i + 1))?;
        }
    }
    let inner = &p.boundaries[1..p.boundaries.len() - 1];
    for (i, &m) in inner.iter().enumerate() {
        ensure((m + 1) % (1 << (i + 1)) == 0, || format!("m_{} = {m} is not in R_{}", i + 1, i + 1))?;
    }
    Ok(format!("{} blocks checked over 2^14 indices, boundaries {:?}", p.selectors.len(), inner))
}

fn limit_shadowing() -> Result<String, String> {
    let rot = builtins::rotations(&[std::f64::consts::SQRT_2 - 1.0]);
    let defects: Vec<f64> = (0..10_000).map(|i| (1.0 / (i + 1) as f64).min(0.5)).collect();
    let po = inject_defects(&rot, &Point::Real(0.0), &defects, &Displacement::Alternating).map_err(|e| e.to_string())?;
    let r = limit_shadow_point(&rot, &po, &IsometryTransport, &LimitConfig { levels: 8, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let errors: Vec<f64> = r.table.iter().map(|row| row.window_error).collect();
    ensure(errors.len() == 8, || format!("{} levels", errors.len()))?;
    ensure(errors.windows(2).all(|w| w[1] <= w[0]), || format!("table not monotone: {errors:?}"))?;
    let last = *errors.last().unwrap();
    ensure(last < 0.125, || format!("final window error {last}"))?;
    Ok(format!("window errors {:.4} → {last:.4}, nonincreasing", errors[0]))
}

fn average_shadowing() -> Result<String, String> {
    let sub = InvariantSubsystem::finite(builtins::attractor8(), builtins::attractor8_cycle().into_iter().map(Point::state).collect())
        .map_err(|e| e.to_string())?;
    let horizon = 10_000;
    let defects = squares(horizon);
    let partner = Displacement::Partner { partner: builtins::attractor8_partner() };
    let po = inject_defects(&sub.ambient, &Point::state(0), &defects, &partner).map_err(|e| e.to_string())?;
    let r = average_shadow_point(&sub, &po).map_err(|e| e.to_string())?;

    let lifted = lift_to_a(&sub, &po, &r.surgery, &sub.fill_point()).map_err(|e| e.to_string())?;
    let allowed = r.surgery.j_prime.union(&r.surgery.decomposition.fill_markers);
    for i in 0..horizon {
        let image = sub.ambient.evaluate(i, &lifted.points[i]).map_err(|e| e.to_string())?;
        ensure(image == lifted.points[i + 1] || allowed.contains(i), || format!("lifted defect at {i} outside J' ∪ B"))?;
    }
    let orbit = sub.ambient.compose(&r.point, horizon).map_err(|e| e.to_string())?.points;
    let misses = orbit.iter().zip(&po.points).filter(|(y, x)| y != x).count();
    let cesaro = misses as f64 / (horizon + 1) as f64;
    ensure(cesaro < 0.05, || format!("Cesàro error {cesaro}"))?;
    // 0/1 metric: every term is an integer count
    let to_lift = orbit.iter().zip(&lifted.points).filter(|(y, l)| y != l).count();
    let jmask = r.surgery.j_prime.mask();
    let off_j = (0..=horizon).filter(|&i| !jmask[i] && lifted.points[i] != po.points[i]).count();
    let on_j = r.surgery.j_prime.len();
    ensure(misses <= to_lift + off_j + on_j, || format!("{misses} > {to_lift} + {off_j} + {on_j}"))?;
    ensure(r.triangle.holds && r.triangle.total == misses as f64, || "reported triangle certificate disagrees".into())?;
    Ok(format!("Cesàro error {cesaro:.5}, triangle {misses} ≤ {to_lift} + {off_j} + {on_j}"))
}

fn products() -> Result<String, String> {
    let clock = Instant::now();
    let families = [builtins::swap_blocks4(), builtins::identity3(), builtins::cycle3()];
    let configs = [(0.15, 0.05), (0.15, 0.5)];
    let mut records = 0;
    let mut failing_factors = 0;
    for (eps, delta) in configs {
        let cfg = CheckConfig { eps, delta, max_len: 6, ..Default::default() };
        for f in &families {
            for g in &families {
                for variant in [ShadowingVariant::H, ShadowingVariant::SLimit] {
                    let r = product_equivalence_check(f, g, variant, &cfg, delta, delta).map_err(|e| e.to_string())?;
                    ensure(r.consistent, || format!("{} x {} {variant} at ({eps}, {delta})", f.label, g.label))?;
                    records += 1;
                    failing_factors += usize::from(!r.factor_f.pass);
                }
            }
        }
    }
    ensure(failing_factors > 0, || "no failing configuration was exercised".into())?;
    let elapsed = clock.elapsed().as_secs_f64();
    ensure(elapsed < 60.0, || format!("runtime {elapsed:.1} s"))?;
    Ok(format!("{records} records consistent ({failing_factors} with a failing factor), {elapsed:.1} s"))
}

fn determinism() -> Result<String, String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    let rows_a = run_suite(&dir, Overrides::default(), a.path()).map_err(|e| e.to_string())?;
    let rows_b = run_suite(&dir, Overrides::default(), b.path()).map_err(|e| e.to_string())?;
    ensure(rows_a.iter().chain(&rows_b).all(|r| r.ok), || "a bundled scenario did not meet its expectation".into())?;
    let files = scenario_files(&dir).map_err(|e| e.to_string())?;
    for row in &rows_a {
        let name = format!("{}.report.json", row.name);
        let (x, y) = (std::fs::read(a.path().join(&name)), std::fs::read(b.path().join(&name)));
        ensure(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} scenario reports byte-identical across two runs", files.len()))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("shadowing bound", shadowing_bound),
        ("uniqueness decay", uniqueness_decay),
        ("oracle agreement", oracle_agreement),
        ("periodic shadowing", periodic),
        ("density equivalence", density_equivalence),
        ("patching", patching),
        ("limit shadowing", limit_shadowing),
        ("average shadowing", average_shadowing),
        ("product equivalence", products),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
