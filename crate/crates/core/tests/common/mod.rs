//! Measurements shared by the property and acceptance suites.
#![allow(dead_code)]

use std::sync::OnceLock;

use blankgordon::eigensolver::{shifted_potential, solve_lowest, solve_refined};
use blankgordon::pipeline::{reconstruct, ReconstructOptions, Reconstruction};
use blankgordon::reconstruct::{build_kink, build_nonlinearity, Nonlinearity, OutOfRangePolicy};
use blankgordon::verify::{check_against_table, check_goldstone};
use blankgordon::{catalog_reference, Grid, SampledFunction};

pub const ROWS: [usize; 6] = [1, 2, 3, 4, 5, 6];

pub fn catalog_run(row: usize) -> Reconstruction {
    let p = catalog_reference(row).unwrap();
    reconstruct(&p, &ReconstructOptions::default()).unwrap()
}

pub fn catalog_run_on(row: usize, grid: Grid) -> Reconstruction {
    let p = catalog_reference(row).unwrap();
    let opts = ReconstructOptions {
        grid: Some(grid),
        ..Default::default()
    };
    reconstruct(&p, &opts).unwrap()
}

pub fn sign_changes(values: &[f64]) -> usize {
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let signs: Vec<bool> = values
        .iter()
        .filter(|v| v.abs() > 1e-12 * peak)
        .map(|v| *v > 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Samples on a uniform grid whose successive differences are `steps`.
pub fn monotone_samples(steps: &[f64], decreasing: bool) -> SampledFunction {
    let mut acc = 0.0;
    let mut ys = vec![0.0];
    for s in steps {
        acc += s;
        ys.push(if decreasing { -acc } else { acc });
    }
    let grid = Grid::new(-1.0, 2.0, ys.len()).unwrap();
    SampledFunction::new(grid, ys).unwrap()
}

/// `|interp(invert(y)) - y|` relative to the range, at `y` a fraction `t`
/// through the range.
pub fn round_trip_error(f: &SampledFunction, t: f64) -> f64 {
    let (lo, hi) = (f.min_value(), f.max_value());
    let y = lo + t * (hi - lo);
    let x = f.invert_monotone(y).unwrap();
    (f.interpolate(x).unwrap() - y).abs() / (hi - lo)
}

fn row2_ground() -> &'static (SampledFunction, SampledFunction, f64) {
    static CELL: OnceLock<(SampledFunction, SampledFunction, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = catalog_reference(2).unwrap();
        let g = p.default_grid();
        let r = solve_refined(&p, &g, 0).unwrap();
        let v = shifted_potential(&p, &g, r.energy).unwrap();
        (r.mode, v, r.energy)
    })
}

fn family_member(a: f64, b: f64) -> Nonlinearity {
    let (mode, v, e) = row2_ground();
    let k = build_kink(mode, a, b).unwrap();
    build_nonlinearity(k, mode, v.clone(), *e, OutOfRangePolicy::Error).unwrap()
}

/// Largest `|F_{B'}(u) - F_B(u - A(B' - B))|` over the shared range of the
/// row-2 ground-state family, or `None` when the ranges do not overlap.
pub fn covariance_deviation(a: f64, b: f64, b2: f64) -> Option<f64> {
    let base = family_member(a, b);
    let moved = family_member(a, b2);
    let shift = a * (b2 - b);
    let (lo1, hi1) = base.domain();
    let (lo2, hi2) = moved.domain();
    let (lo, hi) = ((lo1 + shift).max(lo2), (hi1 + shift).min(hi2));
    if hi <= lo {
        return None;
    }
    // keep the shifted lattice inside both ranges despite rounding of the shift
    let pad = 1e-12 * (hi - lo);
    let (lo, hi) = (lo + pad, hi - pad);
    let mut worst = 0.0_f64;
    for j in 0..=1000 {
        let u = lo + (hi - lo) * j as f64 / 1000.0;
        worst = worst.max((moved.eval_f(u).unwrap() - base.eval_f(u - shift).unwrap()).abs());
    }
    Some(worst)
}

/// Rows and mode counts whose node counts are checked.
pub const STURM_CASES: [(usize, usize); 6] = [(1, 1), (2, 2), (3, 3), (4, 3), (5, 1), (6, 3)];

/// First `(row, mode, sign changes, reported nodes)` that breaks the rule
/// that mode `m` has `m` nodes.
pub fn sturm_violation() -> Option<(usize, usize, usize, usize)> {
    for (row, k) in STURM_CASES {
        let p = catalog_reference(row).unwrap();
        let s = solve_lowest(&p, &p.default_grid(), k).unwrap();
        for (m, mode) in s.modes.iter().enumerate() {
            let changes = sign_changes(mode.mode.values());
            if changes != m || mode.node_count != m {
                return Some((row, m, changes, mode.node_count));
            }
        }
    }
    None
}

/// `|E₀(2h) + 1| / |E₀(h) + 1|` for the first Pöschl–Teller well.
pub fn ground_energy_order_ratio() -> f64 {
    let p = catalog_reference(1).unwrap();
    let err = |n| {
        let s = solve_lowest(&p, &Grid::new(-20.0, 20.0, n).unwrap(), 1).unwrap();
        (s.ground_energy + 1.0).abs()
    };
    err(2001) / err(4001)
}

fn cumulative_derivative_error(n: usize) -> f64 {
    let g = Grid::new(-20.0, 20.0, n).unwrap();
    let f = SampledFunction::from_fn(g, |x| 1.0 / x.cosh()).unwrap();
    let back = f.derivative().cumulative_integral();
    let f0 = f.values()[0];
    f.values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| (a - f0 - b).abs())
        .fold(0.0, f64::max)
}

/// Error ratio of cumulative-integral-of-derivative on sech under h-halving.
pub fn cumulative_derivative_order_ratio() -> f64 {
    cumulative_derivative_error(2001) / cumulative_derivative_error(4001)
}

/// Goldstone residual of row 1's ground mode with one node raised by `1e-3`,
/// and whether the check passed.
pub fn perturbed_mode_control() -> (f64, bool) {
    let rec = catalog_run(1);
    let mut s = rec.spectrum.clone();
    let mut v = s.modes[0].mode.values().to_vec();
    let mid = v.len() / 2;
    v[mid] += 1e-3;
    s.modes[0].mode = SampledFunction::new(rec.grid, v).unwrap();
    let c = check_goldstone(&s, 0);
    (c.max_abs_error, c.pass)
}

/// `F` error against the table for row 1 reconstructed with `A` raised by 1%,
/// and whether the comparison passed.
pub fn perturbed_amplitude_control() -> (f64, bool) {
    let p = catalog_reference(1).unwrap();
    let a = p.reference.as_ref().unwrap().a_ref;
    let opts = ReconstructOptions {
        a: Some(1.01 * a),
        ..Default::default()
    };
    let rec = reconstruct(&p, &opts).unwrap();
    let checks = check_against_table(1, rec.kink(), &rec.nonlinearity).unwrap();
    let (_, f) = checks.iter().find(|(n, _)| n == "table_F").unwrap();
    (f.max_abs_error, f.pass)
}

/// Row 1 on 101 points: `(kink error, F error, E₀ error, any table check
/// passed)`.
pub fn under_resolved_control() -> (f64, f64, f64, bool) {
    let rec = catalog_run_on(1, Grid::new(-20.0, 20.0, 101).unwrap());
    let checks = check_against_table(1, rec.kink(), &rec.nonlinearity).unwrap();
    let err = |name: &str| {
        checks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.max_abs_error)
            .unwrap()
    };
    (
        err("table_kink"),
        err("table_F"),
        (rec.spectrum.ground_energy + 1.0).abs(),
        checks.iter().any(|(_, c)| c.pass),
    )
}

/// Composite adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    adaptive(f, [a, b], [fa, fb, fc], whole, eps, 40)
}

fn adaptive(
    f: &dyn Fn(f64) -> f64,
    [a, b]: [f64; 2],
    [fa, fb, fc]: [f64; 3],
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * eps {
        return left + right + diff / 15.0;
    }
    adaptive(f, [a, c], [fa, fc, fd], left, 0.5 * eps, depth - 1)
        + adaptive(f, [c, b], [fc, fb, fe], right, 0.5 * eps, depth - 1)
}

/// Root of the increasing function `g` on `[lo, hi]` by bisection to full
/// precision.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, target: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
