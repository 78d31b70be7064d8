mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use blankgordon::catalog_reference;
use blankgordon::eigensolver::solve_lowest;
use blankgordon::reconstruct::Nonlinearity;
use blankgordon::simulate::{evolve, linear_fit, Perturbation, PerturbationShape, SimConfig};

use common::*;

fn strictly_monotone() -> impl Strategy<Value = (Vec<f64>, bool)> {
    (prop::collection::vec(1e-3..10.0_f64, 4..60), any::<bool>())
}

proptest! {
    #[test]
    fn monotone_round_trip((steps, decreasing) in strictly_monotone(), t in 0.0..=1.0_f64) {
        let f = monotone_samples(&steps, decreasing);
        prop_assert!(round_trip_error(&f, t) <= 1e-10);
    }

    #[test]
    fn interpolation_stays_within_bracketing_nodes(
        (steps, decreasing) in strictly_monotone(),
        seed in any::<u64>(),
    ) {
        let f = monotone_samples(&steps, decreasing);
        let g = *f.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let x = rng.gen_range(g.x_min()..=g.x_max());
            let i = g.cell_of(x);
            let (a, b) = (f.values()[i], f.values()[i + 1]);
            let v = f.interpolate(x).unwrap();
            prop_assert!(v >= a.min(b) && v <= a.max(b), "{v} outside [{a}, {b}] at {x}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn translation_covariance_in_b(
        a in prop_oneof![-3.0..-0.3_f64, 0.3..3.0_f64],
        b in -2.0..2.0_f64,
        b2 in -2.0..2.0_f64,
    ) {
        if let Some(d) = covariance_deviation(a, b, b2) {
            prop_assert!(d <= 1e-8, "deviation {d}");
        }
    }
}

#[test]
fn cumulative_integral_of_derivative_is_second_order() {
    let ratio = cumulative_derivative_order_ratio();
    assert!(ratio >= 3.5, "ratio {ratio}");
}

#[test]
fn kink_differences_reproduce_the_mode() {
    for row in ROWS {
        let rec = catalog_run(row);
        let k = rec.kink();
        let (u, m) = (k.samples.values(), k.mode.values());
        let h = k.grid().spacing();
        let scale = k.a.abs() * k.mode.max_abs();
        for i in 0..u.len() - 1 {
            let d = (u[i + 1] - u[i]) / h - k.a * 0.5 * (m[i] + m[i + 1]);
            assert!(d.abs() <= 1e-10 * scale, "row {row}, node {i}: {d}");
        }
    }
}

#[test]
fn catalog_kinks_integrate_their_modes() {
    for row in ROWS {
        let p = catalog_reference(row).unwrap();
        let r = p.reference.unwrap();
        let (mode, kink) = (r.closed_form_mode.unwrap(), r.closed_form_kink.unwrap());
        let mut xs: Vec<f64> = (0..100).map(|j| -5.0 + 10.0 * j as f64 / 99.0).collect();
        // break the quadrature at the cusp of the delta-well mode
        xs.push(0.0);
        xs.sort_by(f64::total_cmp);
        let mut acc = simpson(&mode, -80.0, xs[0], 1e-15);
        let mut prev = xs[0];
        for &x in &xs {
            acc += simpson(&mode, prev, x, 1e-15);
            prev = x;
            let expected = r.a_ref * (r.b_ref + acc);
            assert!(
                (kink(x) - expected).abs() <= 1e-10,
                "row {row}, x = {x}: {} vs {expected}",
                kink(x)
            );
        }
    }
}

#[test]
fn mode_m_has_m_nodes() {
    assert_eq!(sturm_violation(), None);
}

#[test]
fn ground_energy_converges_at_second_order() {
    let ratio = ground_energy_order_ratio();
    assert!(ratio >= 3.5, "ratio {ratio}");
}

#[test]
fn ground_modes_are_positive_with_small_residual() {
    for row in ROWS {
        let p = catalog_reference(row).unwrap();
        let s = solve_lowest(&p, &p.default_grid(), 1).unwrap();
        let m = &s.modes[0];
        let v = m.mode.values();
        let peak = m.mode.max_abs();
        let min = v[1..v.len() - 1]
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(min >= -1e-12 * peak, "row {row}: {min}");
        assert!(
            m.relative_residual <= 1e-9,
            "row {row}: {}",
            m.relative_residual
        );
    }
}

fn slope_mismatch(nl: &Nonlinearity) -> f64 {
    let (lo, hi) = nl.domain();
    let delta = 1e-4 * (hi - lo);
    let jump = nl.singular_node.map(|i| nl.kink.samples.values()[i]);
    let mut worst = 0.0_f64;
    for j in 0..50 {
        let u = lo + (hi - lo) * (0.02 + 0.96 * j as f64 / 49.0);
        if jump.is_some_and(|s| (u - s).abs() < 2.0 * delta) {
            continue;
        }
        let fd = (nl.eval_f(u + delta).unwrap() - nl.eval_f(u - delta).unwrap()) / (2.0 * delta);
        worst = worst.max((nl.eval_f_prime(u).unwrap() - fd).abs());
    }
    worst
}

// Trapezoid kinks and central-difference f agree with V - E_ref only to
// O(h²), with a row-dependent constant; the mismatch must vanish at that order.
#[test]
fn exact_and_finite_difference_slopes_agree() {
    ROWS.par_iter().for_each(|&row| {
        let g = catalog_reference(row).unwrap().default_grid();
        let run = |grid| slope_mismatch(&catalog_run_on(row, grid).nonlinearity);
        let (coarse, fine) = (run(g), run(g.refined()));
        assert!(coarse <= 2.5e-3, "row {row}: {coarse}");
        assert!(coarse / fine >= 3.5, "row {row}: {coarse} then {fine}");
        if matches!(row, 1 | 5) {
            assert!(coarse <= 1e-4, "row {row}: {coarse}");
        }
    });
}

#[test]
fn reports_are_reproducible() {
    let a = catalog_run(3);
    let b = catalog_run(3);
    assert_eq!(a.kink().to_csv(), b.kink().to_csv());
    assert_eq!(
        a.nonlinearity.to_csv().unwrap(),
        b.nonlinearity.to_csv().unwrap()
    );
    assert_eq!(
        blankgordon::verify::verify(&a).unwrap().to_json(),
        blankgordon::verify::verify(&b).unwrap().to_json()
    );
}

#[test]
fn energy_is_conserved_over_ten_thousand_steps() {
    ROWS.par_iter().for_each(|&row| {
        let rec = catalog_run(row);
        let mut cfg = SimConfig::with_courant(rec.grid, 0.5, 0.0);
        cfg.t_final = 1e4 * cfg.dt;
        assert_eq!(cfg.steps(), 10_000);
        let r = evolve(&rec.nonlinearity, &cfg, Some(&rec.spectrum)).unwrap();
        assert!(r.energy_drift <= 1e-6, "row {row}: {}", r.energy_drift);
    });
}

fn internal_mode_frequency(amplitude: f64, courant: f64) -> f64 {
    let rec = catalog_run(2);
    let spectrum = solve_lowest(&rec.potential, &rec.grid, 2).unwrap();
    let mut cfg = SimConfig::with_courant(rec.grid, courant, 100.0);
    cfg.perturbation = Some(Perturbation {
        amplitude,
        shape: PerturbationShape::DesignatedMode(1),
    });
    let r = evolve(&rec.nonlinearity, &cfg, Some(&spectrum)).unwrap();
    r.measured_frequencies[0].omega
}

#[test]
fn halving_dt_leaves_the_frequency_unchanged() {
    let (coarse, fine) = rayon::join(
        || internal_mode_frequency(1e-3, 0.5),
        || internal_mode_frequency(1e-3, 0.25),
    );
    let rel = (coarse - fine).abs() / fine;
    assert!(rel <= 5e-4, "{coarse} vs {fine}");
}

#[test]
fn zero_mode_velocity_translates_the_kink() {
    let rec = catalog_run(1);
    let mut cfg = SimConfig::with_courant(rec.grid, 0.5, 20.0);
    cfg.initial_velocity = Some(Perturbation {
        amplitude: 1e-2,
        shape: PerturbationShape::DesignatedMode(0),
    });
    let r = evolve(&rec.nonlinearity, &cfg, Some(&rec.spectrum)).unwrap();
    let centers = r.center_series.unwrap();
    let t: Vec<f64> = (0..centers.len()).map(|k| k as f64 * r.dt).collect();
    let (slope, r2) = linear_fit(&t, &centers);
    assert!(slope.abs() > 1e-3, "slope {slope}");
    assert!(r2 >= 0.999, "R² {r2}");
}

#[test]
fn zero_mode_displacement_does_not_oscillate() {
    let rec = catalog_run(1);
    let mut cfg = SimConfig::with_courant(rec.grid, 0.5, 20.0);
    cfg.perturbation = Some(Perturbation {
        amplitude: 1e-2,
        shape: PerturbationShape::DesignatedMode(0),
    });
    let r = evolve(&rec.nonlinearity, &cfg, Some(&rec.spectrum)).unwrap();
    let centers = r.center_series.unwrap();
    let (lo, hi) = centers
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| {
            (a.min(c), b.max(c))
        });
    // a shift by ε·mode moves the centre by about ε/A and then stays put
    assert!(centers[0].abs() > 1e-3);
    assert!(hi - lo < 1e-4, "centre wanders by {}", hi - lo);
}

#[test]
fn negative_control_perturbed_mode() {
    let (residual, pass) = perturbed_mode_control();
    assert!(residual > 1e-8 && !pass, "{residual}");
}

#[test]
fn negative_control_perturbed_amplitude() {
    let (err, pass) = perturbed_amplitude_control();
    assert!(!pass, "{err}");
}

#[test]
fn negative_control_under_resolved_grid() {
    let (kink, f, e0, any_pass) = under_resolved_control();
    assert!(!any_pass, "kink {kink}, F {f}");
    assert!(e0 > 1e-4, "E0 error {e0}");
}
