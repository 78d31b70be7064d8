//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the lines.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erf;

use blankgordon::eigensolver::solve_lowest;
use blankgordon::pipeline::{reconstruct, ReconstructOptions};
use blankgordon::potentials::{row4_printed_kink, row4_printed_nonlinearity};
use blankgordon::reconstruct::Nonlinearity;
use blankgordon::simulate::{evolve, Perturbation, PerturbationShape, SimConfig};
use blankgordon::verify::{check_forward_identity, check_goldstone, check_stationarity};
use blankgordon::{catalog_reference, Potential};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Largest `|F(u) - exact(u)|` over 1001 points of `[lo, hi]` passing `keep`.
fn f_error(
    nl: &Nonlinearity,
    lo: f64,
    hi: f64,
    exact: impl Fn(f64) -> f64,
    keep: impl Fn(f64) -> bool,
) -> f64 {
    (0..=1000)
        .map(|j| lo + (hi - lo) * j as f64 / 1000.0)
        .filter(|&u| keep(u))
        .map(|u| (nl.eval_f(u).unwrap() - exact(u)).abs())
        .fold(0.0, f64::max)
}

/// Largest `|ū(x_i) - exact(x_i)|` over every grid node.
fn kink_error(nl: &Nonlinearity, exact: impl Fn(f64) -> f64) -> f64 {
    let g = nl.kink.grid();
    nl.kink
        .samples
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| (u - exact(g.x(i))).abs())
        .fold(0.0, f64::max)
}

fn ground_energies() -> Outcome {
    let expected = [
        (1, -1.0, 1e-4),
        (2, -4.0, 1e-4),
        (3, -9.0, 1e-4),
        (4, -16.0, 1e-4),
        (5, -0.25, 2e-3),
        (6, 2.0, 1e-3),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (row, e0, tol) in expected {
        let p = catalog_reference(row).unwrap();
        let s = solve_lowest(&p, &p.default_grid(), 1).unwrap();
        let err = (s.ground_energy - e0).abs();
        pass &= err <= tol;
        parts.push(format!("row {row} |ΔE0| {err:.1e}"));
    }
    outcome(pass, parts.join(", "))
}

fn sine_gordon() -> Outcome {
    let nl = catalog_run(1).nonlinearity;
    let f = f_error(&nl, 0.02 * 2.0 * PI, 0.98 * 2.0 * PI, f64::sin, |_| true);
    let k = kink_error(&nl, |x| 4.0 * x.exp().atan());
    outcome(
        f <= 1e-4 && k <= 1e-5,
        format!("max|F - sin u| {f:.2e} (≤ 1e-4), max|ū - 4 atan eˣ| {k:.2e} (≤ 1e-5)"),
    )
}

fn phi_four() -> Outcome {
    let nl = catalog_run(2).nonlinearity;
    let f = f_error(&nl, -0.98, 0.98, |u| -2.0 * u + 2.0 * u.powi(3), |_| true);
    let k = kink_error(&nl, f64::tanh);
    outcome(
        f <= 1e-4 && k <= 1e-5,
        format!("max|F - (2u³ - 2u)| {f:.2e} (≤ 1e-4), max|ū - tanh| {k:.2e} (≤ 1e-5)"),
    )
}

fn sawtooth() -> Outcome {
    let nl = catalog_run(5).nonlinearity;
    let exact = |u: f64| (u - u.signum()) / 4.0;
    let f = f_error(&nl, -0.98, 0.98, exact, |u| u.abs() >= 0.02);
    outcome(
        f <= 1e-3,
        format!("max|F - (u - sign u)/4| on 0.02 ≤ |u| ≤ 0.98 {f:.2e} (≤ 1e-3)"),
    )
}

/// Inverse error function by bisection on `erf`.
fn inverse_erf(u: f64) -> f64 {
    bisect(erf, -7.0, 7.0, u)
}

fn inverse_erf_model() -> Outcome {
    let nl = catalog_run(6).nonlinearity;
    let k = kink_error(&nl, erf);
    let exact = |u: f64| {
        let y = inverse_erf(u);
        -4.0 * (-y * y).exp() * y / PI.sqrt()
    };
    let f = f_error(&nl, -0.95, 0.95, exact, |_| true);
    outcome(
        f <= 1e-4 && k <= 1e-5,
        format!("max|ū - erf| {k:.2e} (≤ 1e-5), max|F - oracle| on |u| ≤ 0.95 {f:.2e} (≤ 1e-4)"),
    )
}

fn identity_battery() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for row in ROWS {
        let rec = catalog_run(row);
        let nl = &rec.nonlinearity;
        let fwd = check_forward_identity(nl, &rec.potential, &rec.grid).unwrap();
        let st = check_stationarity(rec.kink(), nl).unwrap();
        let gs = check_goldstone(&rec.spectrum, rec.designated);
        pass &= fwd.max_abs_error <= 1e-6 && st.max_abs_error <= 5e-5 && gs.max_abs_error <= 1e-8;
        parts.push(format!(
            "row {row} fwd {:.1e} stat {:.1e} gold {:.1e}",
            fwd.max_abs_error, st.max_abs_error, gs.max_abs_error
        ));
    }
    outcome(pass, parts.join("; "))
}

fn excited_state() -> Outcome {
    let p = Potential::poschl_teller(2).unwrap();
    let opts = ReconstructOptions {
        mode_index: 1,
        a: Some(0.5),
        b: Some(0.0),
        ..Default::default()
    };
    let rec = reconstruct(&p, &opts).unwrap();
    let nl = &rec.nonlinearity;
    let f = f_error(nl, -0.95, -0.05, |u| u - 2.0 * u.powi(3), |_| true);
    let branch = nl.branch_deviation.unwrap_or(f64::INFINITY);
    outcome(
        f <= 1e-4 && branch <= 1e-6,
        format!("max|F - (u - 2u³)| on [-0.95, -0.05] {f:.2e} (≤ 1e-4), branch deviation {branch:.1e} (≤ 1e-6)"),
    )
}

fn dynamics() -> Outcome {
    let stationary = |row: usize| {
        let rec = catalog_run(row);
        let cfg = SimConfig::with_courant(rec.grid, 0.5, 20.0);
        let r = evolve(&rec.nonlinearity, &cfg, Some(&rec.spectrum)).unwrap();
        (r.drift, r.energy_drift)
    };
    let rec = catalog_run(2);
    let spectrum = solve_lowest(&rec.potential, &rec.grid, 2).unwrap();
    let oracle = (spectrum.modes[1].energy - spectrum.modes[0].energy).sqrt();
    let oscillation = |amplitude: f64| {
        let mut cfg = SimConfig::with_courant(rec.grid, 0.5, 100.0);
        cfg.perturbation = Some(Perturbation {
            amplitude,
            shape: PerturbationShape::DesignatedMode(1),
        });
        let r = evolve(&rec.nonlinearity, &cfg, Some(&spectrum)).unwrap();
        let omega = r.measured_frequencies.first().map_or(f64::NAN, |p| p.omega);
        (omega, r.energy_drift)
    };
    let ((d1, e1), (d2, e2)) = rayon::join(|| stationary(1), || stationary(2));
    let ((w, ew), (w_half, ew_half)) = rayon::join(|| oscillation(1e-3), || oscillation(5e-4));
    let omega_err = (w - oracle).abs() / oracle;
    let halving = (w - w_half).abs() / w;
    let energy = e1.max(e2).max(ew).max(ew_half);
    outcome(
        d1 <= 1e-3 && d2 <= 1e-3 && omega_err <= 0.01 && energy <= 1e-6 && halving <= 1e-3,
        format!(
            "drift row 1 {d1:.1e}, row 2 {d2:.1e} (≤ 1e-3); ω {w:.6} vs √(E1 - E0) {oracle:.6}, rel {omega_err:.1e} (≤ 1e-2); \
             energy drift {energy:.1e} (≤ 1e-6); amplitude halving Δω/ω {halving:.1e} (≤ 1e-3)"
        ),
    )
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut round_trip = 0.0_f64;
    for _ in 0..500 {
        let n = rng.gen_range(4..60);
        let steps: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..10.0)).collect();
        let f = monotone_samples(&steps, rng.gen());
        round_trip = round_trip.max(round_trip_error(&f, rng.gen_range(0.0..=1.0)));
    }
    let mut covariance = 0.0_f64;
    for _ in 0..12 {
        let a = rng.gen_range(0.3..3.0) * if rng.gen() { 1.0 } else { -1.0 };
        let (b, b2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if let Some(d) = covariance_deviation(a, b, b2) {
            covariance = covariance.max(d);
        }
    }
    let sturm = sturm_violation();
    let e0_ratio = ground_energy_order_ratio();
    let cum_ratio = cumulative_derivative_order_ratio();
    let (mode_res, mode_pass) = perturbed_mode_control();
    let (amp_err, amp_pass) = perturbed_amplitude_control();
    let (coarse_k, coarse_f, coarse_e0, coarse_pass) = under_resolved_control();
    let pass = round_trip <= 1e-10
        && covariance <= 1e-8
        && sturm.is_none()
        && e0_ratio >= 3.5
        && cum_ratio >= 3.5
        && !mode_pass
        && mode_res > 1e-8
        && !amp_pass
        && !coarse_pass
        && coarse_e0 > 1e-4;
    outcome(
        pass,
        format!(
            "round trip {round_trip:.1e}, covariance {covariance:.1e}, node counts {}, \
             order ratios E0 {e0_ratio:.2} / ∫∂ {cum_ratio:.2}; controls fail as required: \
             perturbed mode residual {mode_res:.1e}, A·1.01 F error {amp_err:.1e}, \
             101-point grid kink {coarse_k:.1e} F {coarse_f:.1e} E0 {coarse_e0:.1e}",
            if sturm.is_none() {
                "ok".to_string()
            } else {
                format!("{sturm:?}")
            }
        ),
    )
}

fn corrected_row4_kink(x: f64) -> f64 {
    let t = x.tanh();
    1.5 * t - 0.5 * t.powi(3)
}

fn corrected_row4_f(u: f64) -> f64 {
    let t = bisect(|t| 1.5 * t - 0.5 * t.powi(3), -1.0, 1.0, u);
    -6.0 * t * (1.0 - t * t).powi(2)
}

/// Central difference extrapolated from steps `η` and `η/2`.
fn derivative(f: &dyn Fn(f64) -> f64, u: f64) -> f64 {
    let d = |eta: f64| (f(u + eta) - f(u - eta)) / (2.0 * eta);
    let eta = 1e-4;
    (4.0 * d(0.5 * eta) - d(eta)) / 3.0
}

fn row4_resolution() -> Outcome {
    let reference = catalog_reference(4).unwrap().reference.unwrap();
    let (a, b) = (reference.a_ref, reference.b_ref);
    let sech4 = |x: f64| x.cosh().powi(-4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut xs: Vec<f64> = (0..100).map(|_| rng.gen_range(-2.5..2.5)).collect();
    xs.sort_by(f64::total_cmp);

    // brute force: quadrature of the mode and the slope identity at each point
    let (mut printed_kink, mut corrected_kink) = (0.0_f64, 0.0_f64);
    let (mut printed_slope, mut corrected_slope) = (0.0_f64, 0.0_f64);
    let mut integral = simpson(&sech4, -40.0, xs[0], 1e-15);
    let mut prev = xs[0];
    for &x in &xs {
        integral += simpson(&sech4, prev, x, 1e-15);
        prev = x;
        let u = a * (b + integral);
        printed_kink = printed_kink.max((row4_printed_kink(x) - u).abs());
        corrected_kink = corrected_kink.max((corrected_row4_kink(x) - u).abs());
        let v_shift = -20.0 * x.cosh().powi(-2) + 16.0;
        printed_slope =
            printed_slope.max((derivative(&row4_printed_nonlinearity, u) - v_shift).abs());
        corrected_slope = corrected_slope.max((derivative(&corrected_row4_f, u) - v_shift).abs());
    }
    let corrected_wins = corrected_kink < printed_kink && corrected_slope < printed_slope;
    let accepted = corrected_kink <= 1e-9 && corrected_slope <= 1e-5;

    // the accepted oracle against the reconstruction on |u| ≤ 0.95
    let rec = catalog_run(4);
    let nl = &rec.nonlinearity;
    let f = f_error(nl, -0.95, 0.95, corrected_row4_f, |_| true);
    let u = nl.kink.samples.values();
    let g = nl.kink.grid();
    let h2 = g.spacing().powi(2);
    let (mut fwd, mut stat, mut scale) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in nl
        .kink
        .window_nodes()
        .filter(|&i| i > 0 && i + 1 < u.len() && u[i].abs() <= 0.95)
    {
        let x = g.x(i);
        let v_shift = -20.0 * x.cosh().powi(-2) + 16.0;
        fwd = fwd.max((derivative(&corrected_row4_f, u[i]) - v_shift).abs());
        let fi = corrected_row4_f(u[i]);
        stat = stat.max(((u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2 - fi).abs());
        scale = scale.max(fi.abs());
    }
    let stat = stat / scale;
    let gs = check_goldstone(&rec.spectrum, rec.designated).max_abs_error;
    let identities = f <= 1e-3 && fwd <= 1e-3 && stat <= 1e-3 && gs <= 1e-3;
    outcome(
        corrected_wins && accepted && identities,
        format!(
            "kink vs ∫sech⁴: printed {printed_kink:.1e}, corrected {corrected_kink:.1e}; \
             F'(ū) - (V - E0): printed {printed_slope:.1e}, corrected {corrected_slope:.1e}; \
             accepted {}; on |u| ≤ 0.95 F {f:.1e}, forward {fwd:.1e}, stationarity {stat:.1e}, \
             goldstone {gs:.1e} (≤ 1e-3)",
            if corrected_wins {
                "corrected"
            } else {
                "printed"
            }
        ),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "ground energies", ground_energies),
    (2, "sine-Gordon recovery", sine_gordon),
    (3, "phi-four recovery", phi_four),
    (4, "sawtooth recovery", sawtooth),
    (5, "inverse-erf model", inverse_erf_model),
    (6, "identity battery", identity_battery),
    (7, "excited-state kink", excited_state),
    (8, "dynamics", dynamics),
    (9, "property suites", property_suites),
    (10, "row-4 closed forms", row4_resolution),
];

#[test]
fn acceptance() {
    let start = Instant::now();
    let results: Vec<(usize, &str, Outcome, f64)> = CRITERIA
        .par_iter()
        .map(|&(n, name, run)| {
            let t = Instant::now();
            let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            });
            (n, name, o, t.elapsed().as_secs_f64())
        })
        .collect();
    for (n, name, o, secs) in &results {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {n} ({name}, {secs:.1} s): {}", o.detail);
    }
    println!("total {:.1} s", start.elapsed().as_secs_f64());
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
