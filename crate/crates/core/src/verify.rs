//! Forward checks of a reconstruction: the zero-mode residual, the identity
//! `F'(ū(x)) = V(x) - E_ref`, stationarity `ū'' = F(ū)`, and comparison with
//! the catalog's closed forms.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::pipeline::Reconstruction;
use crate::potentials::{catalog_reference, Potential};
use crate::reconstruct::{KinkCase, KinkProfile, ModeSource, Nonlinearity, BRANCH_TOLERANCE};

pub const GOLDSTONE_TOLERANCE: f64 = 1e-8;
pub const FORWARD_TOLERANCE: f64 = 1e-6;
pub const STATIONARITY_TOLERANCE: f64 = 5e-5;

/// One named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Size of the error expected from the discretization order, when the
    /// check measures one.
    pub expectation: Option<f64>,
}

impl CheckEntry {
    pub fn new(max_abs_error: f64, tolerance: f64) -> Self {
        CheckEntry {
            max_abs_error,
            tolerance,
            pass: max_abs_error <= tolerance,
            expectation: None,
        }
    }

    fn expecting(mut self, e: f64) -> Self {
        self.expectation = Some(e);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub potential_id: String,
    pub identities: BTreeMap<String, CheckEntry>,
    /// Edge amplitude of the designated mode relative to its peak.
    pub truncation_tail: f64,
    pub h_squared: f64,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    fn insert(&mut self, name: &str, entry: CheckEntry) {
        self.identities.insert(name.to_string(), entry);
        self.pass = self.identities.values().all(|e| e.pass);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Residual of `(H - E)` applied to the designated mode, relative to its
/// peak.
pub fn check_goldstone(spectrum: &Spectrum, designated: usize) -> CheckEntry {
    let m = &spectrum.modes[designated];
    let r = spectrum.hamiltonian.residual(&m.mode, m.energy) / m.mode.max_abs();
    CheckEntry::new(r, GOLDSTONE_TOLERANCE)
}

fn interior_window(kink: &KinkProfile) -> impl Iterator<Item = usize> {
    let n = kink.samples.values().len();
    kink.window_nodes().filter(move |&i| i > 0 && i + 1 < n)
}

/// `max |F'(ū(x_i)) - (V(x_i) - E_ref)|` over interior window nodes, skipping
/// the singular node of a delta well.
pub fn check_forward_identity(nl: &Nonlinearity, p: &Potential, g: &Grid) -> Result<CheckEntry> {
    if nl.kink.grid() != g {
        return Err(Error::GridMismatch);
    }
    let v = p.regular_part(g)?;
    let u = nl.kink.samples.values();
    let mut worst = 0.0_f64;
    for i in interior_window(&nl.kink) {
        if Some(i) == nl.singular_node {
            continue;
        }
        let exact = v.values()[i] - nl.e_ref;
        worst = worst.max((nl.eval_f_prime(u[i])? - exact).abs());
    }
    Ok(CheckEntry::new(worst, FORWARD_TOLERANCE))
}

/// `max |ū''(x_i) - F(ū(x_i))|` over `nodes` (central second differences) and
/// `max |F(ū(x_i))|`.
pub fn stationarity_error(
    samples: &SampledFunction,
    f: impl Fn(f64) -> Result<f64>,
    nodes: impl Iterator<Item = usize>,
) -> Result<(f64, f64)> {
    let u = samples.values();
    let h2 = samples.grid().spacing().powi(2);
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in nodes {
        let uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
        let fi = f(u[i])?;
        worst = worst.max((uxx - fi).abs());
        scale = scale.max(fi.abs());
    }
    Ok((worst, scale))
}

/// Stationarity error relative to `max |F|`. The three nodes around a delta
/// well's singular node are skipped.
pub fn check_stationarity(kink: &KinkProfile, nl: &Nonlinearity) -> Result<CheckEntry> {
    let skip = nl.singular_node;
    let nodes = interior_window(kink).filter(|&i| skip.is_none_or(|s| i.abs_diff(s) > 1));
    let (worst, scale) = stationarity_error(&kink.samples, |u| nl.eval_f(u), nodes)?;
    let rel = if scale > 0.0 { worst / scale } else { worst };
    Ok(CheckEntry::new(rel, STATIONARITY_TOLERANCE).expecting(kink.grid().spacing().powi(2)))
}

fn kink_tolerance(row: usize) -> f64 {
    // row 4's trapezoid error h²/12 · (3/2) · max|(sech⁴)'| is 1.4e-5 at h = 0.01
    if row == 4 {
        3e-5
    } else {
        1e-5
    }
}

fn f_tolerance(row: usize) -> f64 {
    match row {
        4 | 5 => 1e-3,
        _ => 1e-4,
    }
}

/// Half-width of the window around `u = 0` left out of the row-5 comparison,
/// where `sign(u)` makes `F` jump.
pub const SAWTOOTH_CORNER: f64 = 0.02;

/// Max-norm distance between the reconstructed and closed-form kink.
pub fn check_kink_against_table(row: usize, kink: &KinkProfile) -> Result<CheckEntry> {
    let exact = catalog_reference(row)?
        .reference
        .and_then(|r| r.closed_form_kink)
        .ok_or(Error::UnknownRow(row))?;
    let g = kink.grid();
    let worst = (0..g.len())
        .map(|i| (kink.samples.values()[i] - exact(g.x(i))).abs())
        .fold(0.0, f64::max);
    Ok(CheckEntry::new(worst, kink_tolerance(row)).expecting(g.spacing().powi(2)))
}

/// Max-norm distance between `F` and its closed form on 1001 points spanning
/// the central 98% of the range.
pub fn check_f_against_table(row: usize, nl: &Nonlinearity) -> Result<CheckEntry> {
    let exact = catalog_reference(row)?
        .reference
        .and_then(|r| r.closed_form_f)
        .ok_or(Error::NoClosedForm(row))?;
    let (lo, hi) = nl.domain();
    let w = hi - lo;
    let mut worst = 0.0_f64;
    for j in 0..=1000 {
        let u = lo + w * (0.01 + 0.98 * j as f64 / 1000.0);
        if row == 5 && u.abs() < SAWTOOTH_CORNER {
            continue;
        }
        worst = worst.max((nl.eval_f(u)? - exact(u)).abs());
    }
    Ok(CheckEntry::new(worst, f_tolerance(row)).expecting(nl.kink.grid().spacing().powi(2)))
}

/// Kink and `F` comparisons for a catalog row. Row 3 has no closed-form `F`.
pub fn check_against_table(
    row: usize,
    kink: &KinkProfile,
    nl: &Nonlinearity,
) -> Result<Vec<(String, CheckEntry)>> {
    let k = check_kink_against_table(row, kink)?;
    let f = check_f_against_table(row, nl)?;
    Ok(vec![("table_kink".into(), k), ("table_F".into(), f)])
}

/// Whether the reconstruction is the one the catalog's closed forms describe.
fn compares_to_table(rec: &Reconstruction) -> Option<usize> {
    let row = rec.potential.reference.as_ref()?.table_row?;
    match rec.kink().source {
        ModeSource::Eigen { index: 0, .. } => Some(row),
        _ => None,
    }
}

/// Full battery for one reconstruction.
pub fn verify(rec: &Reconstruction) -> Result<VerificationReport> {
    let nl = &rec.nonlinearity;
    let kink = rec.kink();
    let h2 = rec.grid.spacing().powi(2);
    let designated = &rec.spectrum.modes[rec.designated];
    let v = designated.mode.values();
    let truncation_tail = v[1].abs().max(v[v.len() - 2].abs()) / designated.mode.max_abs();
    let mut report = VerificationReport {
        potential_id: rec.potential.id(),
        identities: BTreeMap::new(),
        truncation_tail,
        h_squared: h2,
        notes: vec![format!(
            "grid spacing h = {:e}; O(h²) errors expected near {h2:e}",
            rec.grid.spacing()
        )],
        pass: true,
    };
    report.insert("goldstone", check_goldstone(&rec.spectrum, rec.designated));
    report.insert(
        "forward_identity",
        check_forward_identity(nl, &rec.potential, &rec.grid)?,
    );
    report.insert("stationarity", check_stationarity(kink, nl)?);
    if kink.case == KinkCase::EvenExtremum {
        let deviation = nl.branch_consistency()?;
        let tol = BRANCH_TOLERANCE * nl.f_profile.max_abs();
        report.insert("branch_consistency", CheckEntry::new(deviation, tol));
    }
    if let Some(row) = compares_to_table(rec) {
        report.insert("table_kink", check_kink_against_table(row, kink)?);
        match check_f_against_table(row, nl) {
            Ok(e) => report.insert("table_F", e),
            Err(Error::NoClosedForm(_)) => report.notes.push(format!(
                "row {row}: no closed form for F; accepted on the identity checks"
            )),
            Err(e) => return Err(e),
        }
        if row == 4 {
            report.notes.push(
                "row 4: F has branch points at u = ±1 (domain edges); values there are flagged"
                    .into(),
            );
        }
    }
    if truncation_tail > 1e-8 {
        report.notes.push(format!(
            "designated mode reaches {truncation_tail:e} of its peak at the grid edge; widen the grid"
        ));
    }
    if rec.spectrum.dynamically_unstable {
        report.notes.push(format!(
            "modes {:?} lie below the designated mode: imaginary frequencies, kink dynamically unstable",
            rec.spectrum.imaginary_modes()
        ));
    }
    Ok(report)
}
