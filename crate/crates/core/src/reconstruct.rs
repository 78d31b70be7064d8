//! Inverse linearization: from a designated mode of the linear problem to the
//! kink `ū = A (B + ∫ mode)`, the profile `f = A · mode'`, and the
//! nonlinearity `F(u) = f(χ(u))` where `χ` inverts the kink.
//!
//! `F'` is never differentiated numerically. Since `F'(ū(x)) = V(x) - E_ref`,
//! it is read off the shifted potential at `χ(u)`.
//!
//! In floating point the kink's tails go flat well before the grid ends. `χ`
//! is therefore defined on the window of nodes where consecutive samples still
//! differ, and values between the window's end and the extreme sample map to
//! the window end.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolver::peak_amplitude;
use crate::error::{Error, Result};
use crate::grid::{fmt17, Grid, MonotoneWindow, SampledFunction};
use crate::interp;

/// Shape class of the kink profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KinkCase {
    Monotone,
    /// Single interior extremum, even about it.
    EvenExtremum,
}

/// Where the mode behind a kink came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModeSource {
    Eigen {
        index: usize,
        energy: f64,
        refined: bool,
    },
    User,
}

/// What `F` does outside the kink's range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutOfRangePolicy {
    #[default]
    Error,
    ClampEnds,
    LinearExtend,
    /// Period equal to the width of the range.
    PeriodicExtend,
}

impl OutOfRangePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            OutOfRangePolicy::Error => "error",
            OutOfRangePolicy::ClampEnds => "clamp-ends",
            OutOfRangePolicy::LinearExtend => "linear-extend",
            OutOfRangePolicy::PeriodicExtend => "periodic-extend",
        }
    }
}

impl FromStr for OutOfRangePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(OutOfRangePolicy::Error),
            "clamp-ends" | "clamp" => Ok(OutOfRangePolicy::ClampEnds),
            "linear-extend" | "linear" => Ok(OutOfRangePolicy::LinearExtend),
            "periodic-extend" | "periodic" => Ok(OutOfRangePolicy::PeriodicExtend),
            other => Err(Error::Parse(format!(
                "unknown out-of-range policy '{other}'"
            ))),
        }
    }
}

/// Tabulated kink together with the mode it was integrated from.
#[derive(Debug, Clone)]
pub struct KinkProfile {
    pub samples: SampledFunction,
    pub mode: SampledFunction,
    pub a: f64,
    pub b: f64,
    pub source: ModeSource,
    pub case: KinkCase,
    pub extremum_index: Option<usize>,
    /// `(min ū, max ū)`; for an even profile, over the right half-line.
    pub u_range: (f64, f64),
    /// Nodes on which `χ` inverts; the right branch for an even profile.
    pub window: MonotoneWindow,
    pub left_window: Option<MonotoneWindow>,
}

fn integrate(mode: &SampledFunction, a: f64, b: f64) -> Result<SampledFunction> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::ZeroA);
    }
    if !b.is_finite() {
        return Err(Error::InvalidSamples("B must be finite".into()));
    }
    mode.cumulative_integral().map(|c| a * (b + c))
}

fn diff_threshold(vals: &[f64], lo: usize, hi: usize) -> (usize, f64) {
    let (cell, max) = (lo..hi)
        .map(|i| (i, (vals[i + 1] - vals[i]).abs()))
        .fold((lo, 0.0_f64), |best, c| if c.1 > best.1 { c } else { best });
    (cell, 1e-14 * max)
}

/// Largest node range inside `[lo, hi]` around the steepest cell on which the
/// samples are still resolvably monotone.
fn resolvable_window(samples: &SampledFunction, lo: usize, hi: usize) -> Result<MonotoneWindow> {
    let vals = samples.values();
    let (cell, tol) = diff_threshold(vals, lo, hi);
    let mut l = cell;
    while l > lo && (vals[l] - vals[l - 1]).abs() > tol {
        l -= 1;
    }
    let mut r = cell + 1;
    while r < hi && (vals[r + 1] - vals[r]).abs() > tol {
        r += 1;
    }
    samples.monotone_window(l, r)
}

/// Monotone kink from a strictly positive mode.
pub fn build_kink(mode: &SampledFunction, a: f64, b: f64) -> Result<KinkProfile> {
    let v = mode.values();
    if let Some(i) = (1..v.len() - 1).find(|&i| !(v[i] > 0.0)) {
        return Err(Error::NotPositiveMode {
            index: i,
            value: v[i],
        });
    }
    let samples = integrate(mode, a, b)?;
    let window = resolvable_window(&samples, 0, samples.values().len() - 1)?;
    Ok(KinkProfile {
        u_range: (samples.min_value(), samples.max_value()),
        samples,
        mode: mode.clone(),
        a,
        b,
        source: ModeSource::User,
        case: KinkCase::Monotone,
        extremum_index: None,
        window,
        left_window: None,
    })
}

/// Kink with a single interior extremum, even about it.
pub fn build_kink_even(mode: &SampledFunction, a: f64, b: f64) -> Result<KinkProfile> {
    let samples = integrate(mode, a, b)?;
    let vals = samples.values();
    let n = vals.len();
    let (_, tol) = diff_threshold(vals, 0, n - 1);
    if tol == 0.0 {
        return Err(Error::NotCase2("profile is constant".into()));
    }
    // sign changes among resolvable differences
    let mut last: Option<(usize, f64)> = None;
    let mut turns = Vec::new();
    for i in 0..n - 1 {
        let d = vals[i + 1] - vals[i];
        if d.abs() <= tol {
            continue;
        }
        if let Some((j, s)) = last {
            if s != d.signum() {
                turns.push((j, i));
            }
        }
        last = Some((i, d.signum()));
    }
    let (j, i) = match turns.as_slice() {
        [one] => *one,
        [] => return Err(Error::NotCase2("no interior extremum".into())),
        many => return Err(Error::NotCase2(format!("{} interior extrema", many.len()))),
    };
    // the extreme node lies between the last difference of one sign and the
    // first of the other
    let is_max = vals[j + 1] > vals[j];
    let e = (j + 1..=i)
        .max_by(|&p, &q| {
            let (vp, vq) = if is_max {
                (vals[p], vals[q])
            } else {
                (-vals[p], -vals[q])
            };
            vp.total_cmp(&vq)
        })
        .expect("non-empty range");
    if e == 0 || e == n - 1 {
        return Err(Error::NotCase2("extremum at the grid edge".into()));
    }
    let amplitude = samples.max_value() - samples.min_value();
    let grid = *samples.grid();
    let xe = grid.x(e) + vertex_offset(vals[e - 1], vals[e], vals[e + 1]) * grid.spacing();
    let mut worst = 0.0_f64;
    for (k, &v) in vals.iter().enumerate().skip(e + 1) {
        let mirror = 2.0 * xe - grid.x(k);
        if mirror < grid.x_min() {
            break;
        }
        worst = worst.max((v - samples.interpolate(mirror)?).abs());
    }
    if worst > 1e-6 * amplitude {
        return Err(Error::NotCase2(format!(
            "profile is not even about its extremum (deviation {worst:e})"
        )));
    }
    let right = resolvable_window(&samples, e, n - 1)?;
    let left = resolvable_window(&samples, 0, e)?;
    if right.lo != e || left.hi != e {
        return Err(Error::NotCase2("extremum is not resolvable".into()));
    }
    let tail = &vals[e..];
    let u_range = (
        tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(KinkProfile {
        samples,
        mode: mode.clone(),
        a,
        b,
        source: ModeSource::User,
        case: KinkCase::EvenExtremum,
        extremum_index: Some(e),
        u_range,
        window: right,
        left_window: Some(left),
    })
}

fn vertex_offset(a: f64, b: f64, c: f64) -> f64 {
    let curvature = a - 2.0 * b + c;
    if curvature == 0.0 {
        0.0
    } else {
        (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
    }
}

impl KinkProfile {
    pub fn grid(&self) -> &Grid {
        self.samples.grid()
    }

    pub fn with_source(mut self, source: ModeSource) -> Self {
        self.source = source;
        self
    }

    /// `χ(u)` on a monotone window, mapping values beyond the resolvable part
    /// of the window to its end.
    fn invert(&self, w: &MonotoneWindow, u: f64) -> Result<f64> {
        let vals = self.samples.values();
        let grid = self.grid();
        let (first, last) = (vals[w.lo], vals[w.hi]);
        let ((vmin, xmin), (vmax, xmax)) = if w.increasing {
            ((first, grid.x(w.lo)), (last, grid.x(w.hi)))
        } else {
            ((last, grid.x(w.hi)), (first, grid.x(w.lo)))
        };
        if u <= vmin {
            Ok(xmin)
        } else if u >= vmax {
            Ok(xmax)
        } else {
            self.samples.invert_in_window(w, u)
        }
    }

    /// `χ(u)` on the evaluation branch.
    pub fn chi(&self, u: f64) -> Result<f64> {
        let (lo, hi) = self.u_range;
        if !(u >= lo && u <= hi) {
            return Err(Error::OutOfRange { value: u, lo, hi });
        }
        self.invert(&self.window, u)
    }

    /// `χ(u)` on the left branch of an even profile.
    pub fn chi_left(&self, u: f64) -> Result<f64> {
        let w = self
            .left_window
            .ok_or_else(|| Error::NotInvertible("profile has a single branch".into()))?;
        let vals = &self.samples.values()[w.lo..=w.hi];
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(u >= lo && u <= hi) {
            return Err(Error::OutOfRange { value: u, lo, hi });
        }
        self.invert(&w, u)
    }

    /// Nodes inside the inversion window(s).
    pub fn window_nodes(&self) -> std::ops::RangeInclusive<usize> {
        let lo = self.left_window.map_or(self.window.lo, |w| w.lo);
        lo..=self.window.hi
    }

    /// `x,u` CSV at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,u\n");
        let g = self.grid();
        for (i, v) in self.samples.values().iter().enumerate() {
            s.push_str(&format!("{},{}\n", fmt17(g.x(i)), fmt17(*v)));
        }
        s
    }
}

/// Evaluatable `F` with its exact derivative.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub kink: KinkProfile,
    /// `f(x) = A · mode'(x)`.
    pub f_profile: SampledFunction,
    /// `V(x) - E_ref` (pointwise part).
    pub shifted_v: SampledFunction,
    pub e_ref: f64,
    pub policy: OutOfRangePolicy,
    /// Largest disagreement between the two branches of an even profile.
    pub branch_deviation: Option<f64>,
    /// Node where the potential is singular (delta well); excluded from checks.
    pub singular_node: Option<usize>,
}

/// Tolerance on the disagreement between the two branches of an even profile,
/// relative to `max |f|`.
pub const BRANCH_TOLERANCE: f64 = 1e-6;

pub fn build_nonlinearity(
    kink: KinkProfile,
    mode: &SampledFunction,
    shifted_v: SampledFunction,
    e_ref: f64,
    policy: OutOfRangePolicy,
) -> Result<Nonlinearity> {
    if mode.grid() != kink.grid() || shifted_v.grid() != kink.grid() {
        return Err(Error::GridMismatch);
    }
    let f_profile = mode.derivative().map(|d| kink.a * d)?;
    let mut nl = Nonlinearity {
        kink,
        f_profile,
        shifted_v,
        e_ref,
        policy,
        branch_deviation: None,
        singular_node: None,
    };
    if nl.kink.case == KinkCase::EvenExtremum {
        let deviation = nl.branch_consistency()?;
        let tolerance = BRANCH_TOLERANCE * nl.f_profile.max_abs().max(f64::MIN_POSITIVE);
        if deviation > tolerance {
            return Err(Error::BranchInconsistency {
                deviation,
                tolerance,
            });
        }
        nl.branch_deviation = Some(deviation);
    }
    Ok(nl)
}

enum Resolved {
    Inside(f64),
    Beyond { end: f64, excess: f64 },
}

impl Nonlinearity {
    pub fn domain(&self) -> (f64, f64) {
        self.kink.u_range
    }

    fn resolve(&self, u: f64) -> Result<Resolved> {
        let (lo, hi) = self.domain();
        if u >= lo && u <= hi {
            return Ok(Resolved::Inside(u));
        }
        if !u.is_finite() {
            return Err(Error::OutOfRange { value: u, lo, hi });
        }
        match self.policy {
            OutOfRangePolicy::Error => Err(Error::OutOfRange { value: u, lo, hi }),
            OutOfRangePolicy::PeriodicExtend => Ok(Resolved::Inside(
                (lo + (u - lo).rem_euclid(hi - lo)).min(hi),
            )),
            OutOfRangePolicy::ClampEnds | OutOfRangePolicy::LinearExtend => {
                let end = u.clamp(lo, hi);
                Ok(Resolved::Beyond {
                    end,
                    excess: u - end,
                })
            }
        }
    }

    /// `F` at `u` given `x = χ(u)` on the same branch: cubic Hermite in `u`
    /// over the cell holding `x`, through `(ū_j, f_j)` with the exact slopes
    /// `V(x_j) - E_ref`.
    fn f_from_chi(&self, x: f64, u: f64) -> Result<f64> {
        let g = self.f_profile.grid();
        let j = g.cell_of(x);
        let (ub, f, s) = (
            self.kink.samples.values(),
            self.f_profile.values(),
            self.shifted_v.values(),
        );
        let (u0, u1) = (ub[j], ub[j + 1]);
        if u0 == u1 || !(u >= u0.min(u1) && u <= u0.max(u1)) {
            return self.f_profile.interpolate(x);
        }
        Ok(interp::hermite(u0, u1, f[j], f[j + 1], s[j], s[j + 1], u))
    }

    fn f_inside(&self, u: f64) -> Result<f64> {
        self.f_from_chi(self.kink.chi(u)?, u)
    }

    fn f_prime_inside(&self, u: f64) -> Result<f64> {
        self.shifted_v.interpolate(self.kink.chi(u)?)
    }

    /// `F(u) = f(χ(u))`, with the out-of-range policy applied.
    pub fn eval_f(&self, u: f64) -> Result<f64> {
        match self.resolve(u)? {
            Resolved::Inside(u) => self.f_inside(u),
            Resolved::Beyond { end, excess } => {
                let base = self.f_inside(end)?;
                Ok(match self.policy {
                    OutOfRangePolicy::LinearExtend => base + self.f_prime_inside(end)? * excess,
                    _ => base,
                })
            }
        }
    }

    /// `F'(u) = V(χ(u)) - E_ref`.
    pub fn eval_f_prime(&self, u: f64) -> Result<f64> {
        match self.resolve(u)? {
            Resolved::Inside(u) => self.f_prime_inside(u),
            Resolved::Beyond { end, .. } => match self.policy {
                OutOfRangePolicy::LinearExtend => self.f_prime_inside(end),
                _ => Ok(0.0),
            },
        }
    }

    /// Largest `|f(χ_left(u)) - f(χ_right(u))|` over 1001 points of the range
    /// the two branches share.
    pub fn branch_consistency(&self) -> Result<f64> {
        let left = self
            .kink
            .left_window
            .ok_or_else(|| Error::NotInvertible("profile has a single branch".into()))?;
        let vals = self.kink.samples.values();
        let span = |w: MonotoneWindow| {
            let s = &vals[w.lo..=w.hi];
            (
                s.iter().copied().fold(f64::INFINITY, f64::min),
                s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        };
        let (l0, l1) = span(left);
        let (r0, r1) = span(self.kink.window);
        let (lo, hi) = (l0.max(r0), l1.min(r1));
        if hi <= lo {
            return Err(Error::NotInvertible("branches share no range".into()));
        }
        let mut worst = 0.0_f64;
        for j in 0..=1000 {
            let u = lo + (hi - lo) * j as f64 / 1000.0;
            let fl = self.f_from_chi(self.kink.chi_left(u)?, u)?;
            let fr = self.f_from_chi(self.kink.chi(u)?, u)?;
            worst = worst.max((fl - fr).abs());
        }
        Ok(worst)
    }

    /// `u` lattice with `points` entries spanning the domain, ends included.
    pub fn lattice(&self, points: usize) -> Vec<f64> {
        let (lo, hi) = self.domain();
        (0..points)
            .map(|j| {
                if j + 1 == points {
                    hi
                } else {
                    lo + (hi - lo) * j as f64 / (points - 1) as f64
                }
            })
            .collect()
    }

    /// `u,F,dF` CSV on a 1001-point lattice over the domain.
    pub fn to_csv(&self) -> Result<String> {
        let mut s = String::from("u,F,dF\n");
        for u in self.lattice(1001) {
            s.push_str(&format!(
                "{},{},{}\n",
                fmt17(u),
                fmt17(self.eval_f(u)?),
                fmt17(self.eval_f_prime(u)?)
            ));
        }
        Ok(s)
    }

    /// Parameters of the reconstruction, floats as 17-digit strings.
    pub fn summary_json(&self) -> serde_json::Value {
        let (lo, hi) = self.domain();
        serde_json::json!({
            "A": fmt17(self.kink.a),
            "B": fmt17(self.kink.b),
            "E_ref": fmt17(self.e_ref),
            "case": self.kink.case,
            "u_range": [fmt17(lo), fmt17(hi)],
            "policy": self.policy.name(),
            "source": self.kink.source,
            "extremum_index": self.kink.extremum_index,
            "branch_deviation": self.branch_deviation.map(fmt17),
        })
    }
}

/// Peak-normalizes a user mode so `A` keeps the same meaning as for solver
/// output.
pub fn peak_normalized(mode: &SampledFunction) -> Result<SampledFunction> {
    let peak = peak_amplitude(mode.values());
    if peak == 0.0 {
        return Err(Error::InvalidSamples("mode is identically zero".into()));
    }
    mode.map(|v| v / peak)
}

/// Compact description of one member of an `(A, B)` family.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub u_range: (f64, f64),
    /// 101 points at fixed relative positions across `u_range`.
    pub u: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepElement {
    pub a: f64,
    pub b: f64,
    pub outcome: Result<(Nonlinearity, SweepSummary)>,
}

/// One monotone reconstruction per `(A, B)` pair, in row-major order over
/// `a_values × b_values`. Failures are kept per element.
pub fn sweep_family(
    mode: &SampledFunction,
    shifted_v: &SampledFunction,
    e_ref: f64,
    a_values: &[f64],
    b_values: &[f64],
) -> Vec<SweepElement> {
    let pairs: Vec<(f64, f64)> = a_values
        .iter()
        .flat_map(|&a| b_values.iter().map(move |&b| (a, b)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(a, b)| {
            let outcome = build_kink(mode, a, b)
                .and_then(|k| {
                    build_nonlinearity(k, mode, shifted_v.clone(), e_ref, OutOfRangePolicy::Error)
                })
                .and_then(|nl| {
                    let u = nl.lattice(101);
                    let f = u
                        .iter()
                        .map(|&u| nl.eval_f(u))
                        .collect::<Result<Vec<_>>>()?;
                    let summary = SweepSummary {
                        u_range: nl.domain(),
                        u,
                        f,
                    };
                    Ok((nl, summary))
                });
            SweepElement { a, b, outcome }
        })
        .collect()
}
