//! Time evolution of `u_tt = u_xx - F(u)` from the kink plus a small
//! perturbation, with velocity-Verlet leapfrog steps.
//!
//! `F` is tabulated on 4096 equally spaced points of its range and evaluated
//! by cubic Hermite interpolation with the exact slopes `F'`. The potential
//! density `W` is the exact integral of that same interpolant, anchored at the
//! lower end of the range, so the semi-discrete energy is conserved exactly
//! and only the leapfrog's bounded `O(dt²)` oscillation remains. For a delta
//! well the kinked `F` is evaluated directly instead of through the table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};
use crate::grid::{fmt17, Grid, SampledFunction};
use crate::interp::{hermite, hermite_integral};
use crate::reconstruct::{KinkCase, Nonlinearity, OutOfRangePolicy};
use crate::spectral::{measure_frequencies, FrequencyPeak, MIN_SERIES_LEN};

pub const MAX_COURANT: f64 = 0.9;
pub const TABLE_POINTS: usize = 4096;
/// Field norm beyond which a run is declared unstable.
pub const BLOWUP_LIMIT: f64 = 1e6;
/// Excursion past the ends of `F`'s domain tolerated under policy `Error`,
/// relative to the domain width, covered by the end tangent. A mode decaying
/// slower than the kink's approach to its asymptote pushes the tail past the
/// end by `O(amplitude²)`; the tangent's error there is `O(slack²)`.
pub const RANGE_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Dirichlet at the kink's end values.
    #[default]
    ClampToKink,
    /// Zero-slope ends.
    Reflecting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationShape {
    /// Peak-normalized eigenmode of the linear problem.
    DesignatedMode(usize),
    Gaussian {
        center: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub shape: PerturbationShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid,
    pub dt: f64,
    pub t_final: f64,
    pub boundary: Boundary,
    /// Added to the kink at `t = 0`.
    pub perturbation: Option<Perturbation>,
    /// Initial velocity; zero when absent.
    pub initial_velocity: Option<Perturbation>,
    /// Probe positions (snapped to the nearest node); empty picks defaults.
    pub probe_positions: Vec<f64>,
}

impl SimConfig {
    pub fn with_courant(grid: Grid, courant: f64, t_final: f64) -> Self {
        SimConfig {
            dt: courant * grid.spacing(),
            grid,
            t_final,
            boundary: Boundary::ClampToKink,
            perturbation: None,
            initial_velocity: None,
            probe_positions: Vec::new(),
        }
    }

    pub fn courant(&self) -> f64 {
        self.dt / self.grid.spacing()
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dt = {} must be > 0",
                self.dt
            )));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "t_final = {} must be > 0",
                self.t_final
            )));
        }
        if self.courant() > MAX_COURANT * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "courant number {} exceeds the stability bound {MAX_COURANT}",
                self.courant()
            )));
        }
        for p in self.perturbation.iter().chain(&self.initial_velocity) {
            if !p.amplitude.is_finite() {
                return Err(Error::InvalidConfig(
                    "perturbation amplitude must be finite".into(),
                ));
            }
            if let PerturbationShape::Gaussian { width, .. } = p.shape {
                if !(width > 0.0) {
                    return Err(Error::InvalidConfig("gaussian width must be > 0".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSeries {
    pub position: f64,
    pub node: usize,
    /// `u(x_p, t) - ū(x_p)` at every step, starting at `t = 0`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub dt: f64,
    pub final_field: SampledFunction,
    /// `max |u(·, t_final) - ū|`.
    pub drift: f64,
    pub probes: Vec<ProbeSeries>,
    pub energy_series: Vec<f64>,
    /// `max |E(t) - E(0)| / |E(0)|`.
    pub energy_drift: f64,
    /// Peaks of the first probe; empty for unperturbed or short runs.
    pub measured_frequencies: Vec<FrequencyPeak>,
    /// Position where the field crosses the midpoint of the kink's range
    /// (monotone kinks only).
    pub center_series: Option<Vec<f64>>,
}

impl SimResult {
    /// `t,probe_1,...` CSV.
    pub fn probes_csv(&self) -> String {
        let mut s = String::from("t");
        for k in 0..self.probes.len() {
            s.push_str(&format!(",probe_{}", k + 1));
        }
        s.push('\n');
        let len = self.probes.first().map_or(0, |p| p.values.len());
        for step in 0..len {
            s.push_str(&fmt17(step as f64 * self.dt));
            for p in &self.probes {
                s.push(',');
                s.push_str(&fmt17(p.values[step]));
            }
            s.push('\n');
        }
        s
    }

    /// `t,energy` CSV.
    pub fn energy_csv(&self) -> String {
        let mut s = String::from("t,energy\n");
        for (k, e) in self.energy_series.iter().enumerate() {
            s.push_str(&format!("{},{}\n", fmt17(k as f64 * self.dt), fmt17(*e)));
        }
        s
    }
}

/// Hermite table of `F` and its running integral `W`.
struct ForceModel<'a> {
    nl: &'a Nonlinearity,
    /// `u` interval around a jump of `F` where the table is bypassed.
    direct: Option<(f64, f64)>,
    lo: f64,
    hi: f64,
    du: f64,
    f: Vec<f64>,
    d: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> ForceModel<'a> {
    fn new(nl: &'a Nonlinearity) -> Result<Self> {
        let (lo, hi) = nl.domain();
        let du = (hi - lo) / (TABLE_POINTS - 1) as f64;
        let node = |j: usize| {
            if j + 1 == TABLE_POINTS {
                hi
            } else {
                lo + du * j as f64
            }
        };
        let f = (0..TABLE_POINTS)
            .map(|j| nl.eval_f(node(j)))
            .collect::<Result<Vec<_>>>()?;
        let d = (0..TABLE_POINTS)
            .map(|j| nl.eval_f_prime(node(j)))
            .collect::<Result<Vec<_>>>()?;
        let mut w = vec![0.0; TABLE_POINTS];
        for j in 1..TABLE_POINTS {
            let (a, b) = (node(j - 1), node(j));
            w[j] = w[j - 1] + hermite_integral(a, b, f[j - 1], f[j], d[j - 1], d[j], b);
        }
        // the jump spreads over the kink cells next to the singular node; the
        // table cells touching them are evaluated directly
        let direct = nl.singular_node.map(|s| {
            let u = nl.kink.samples.values();
            let (a, b) = (u[s.saturating_sub(2)], u[(s + 2).min(u.len() - 1)]);
            (a.min(b) - 2.0 * du, a.max(b) + 2.0 * du)
        });
        Ok(ForceModel {
            direct,
            nl,
            lo,
            hi,
            du,
            f,
            d,
            w,
        })
    }

    fn cell(&self, u: f64) -> (usize, f64, f64) {
        let j = (((u - self.lo) / self.du) as usize).min(TABLE_POINTS - 2);
        let a = self.lo + self.du * j as f64;
        let b = if j + 2 == TABLE_POINTS {
            self.hi
        } else {
            a + self.du
        };
        (j, a, b)
    }

    fn table_f(&self, u: f64) -> f64 {
        let (j, a, b) = self.cell(u);
        hermite(a, b, self.f[j], self.f[j + 1], self.d[j], self.d[j + 1], u)
    }

    fn table_w(&self, u: f64) -> f64 {
        let (j, a, b) = self.cell(u);
        self.w[j] + hermite_integral(a, b, self.f[j], self.f[j + 1], self.d[j], self.d[j + 1], u)
    }

    fn inside_f(&self, u: f64) -> f64 {
        match self.direct {
            Some((a, b)) if u >= a && u <= b => {
                self.nl.eval_f(u).unwrap_or_else(|_| self.table_f(u))
            }
            _ => self.table_f(u),
        }
    }

    /// End of the domain nearest `u` with its `(F, F', W)`.
    fn end(&self, u: f64) -> (f64, f64, f64, f64) {
        if u < self.lo {
            (self.lo, self.f[0], self.d[0], 0.0)
        } else {
            let k = TABLE_POINTS - 1;
            (self.hi, self.f[k], self.d[k], self.w[k])
        }
    }

    fn wrap(&self, u: f64) -> (f64, f64) {
        let width = self.hi - self.lo;
        let periods = ((u - self.lo) / width).floor();
        (
            (self.lo + (u - self.lo) - periods * width).clamp(self.lo, self.hi),
            periods,
        )
    }

    fn beyond_slack(&self, u: f64) -> bool {
        let slack = RANGE_SLACK * (self.hi - self.lo);
        u < self.lo - slack || u > self.hi + slack
    }

    /// `F(u)`, or `Err(u)` when `u` leaves the domain under policy `Error`.
    fn force(&self, u: f64) -> std::result::Result<f64, f64> {
        if u >= self.lo && u <= self.hi {
            return Ok(self.inside_f(u));
        }
        if !u.is_finite() {
            return Err(u);
        }
        let (e, fe, de, _) = self.end(u);
        match self.nl.policy {
            OutOfRangePolicy::Error if self.beyond_slack(u) => Err(u),
            OutOfRangePolicy::Error | OutOfRangePolicy::LinearExtend => Ok(fe + de * (u - e)),
            OutOfRangePolicy::ClampEnds => Ok(fe),
            OutOfRangePolicy::PeriodicExtend => Ok(self.inside_f(self.wrap(u).0)),
        }
    }

    fn potential(&self, u: f64) -> f64 {
        if u >= self.lo && u <= self.hi {
            return self.table_w(u);
        }
        let (e, fe, de, we) = self.end(u);
        let x = u - e;
        match self.nl.policy {
            OutOfRangePolicy::ClampEnds => we + fe * x,
            OutOfRangePolicy::PeriodicExtend => {
                let (v, periods) = self.wrap(u);
                periods * self.w[TABLE_POINTS - 1] + self.table_w(v)
            }
            _ => we + fe * x + 0.5 * de * x * x,
        }
    }
}

fn shape_values(p: &Perturbation, grid: &Grid, spectrum: Option<&Spectrum>) -> Result<Vec<f64>> {
    let values = match p.shape {
        PerturbationShape::DesignatedMode(k) => {
            let s = spectrum.ok_or_else(|| {
                Error::InvalidConfig("a mode perturbation needs the spectrum".into())
            })?;
            let m = s.modes.get(k).ok_or_else(|| {
                Error::InvalidConfig(format!("mode {k} not among {} computed", s.modes.len()))
            })?;
            if m.mode.grid() != grid {
                return Err(Error::GridMismatch);
            }
            m.mode.values().to_vec()
        }
        PerturbationShape::Gaussian { center, width } => (0..grid.len())
            .map(|i| (-((grid.x(i) - center) / width).powi(2)).exp())
            .collect(),
    };
    Ok(values.into_iter().map(|v| p.amplitude * v).collect())
}

/// Probe positions used when the config names none: the largest-amplitude
/// node of the perturbation, or the kink's middle node.
pub fn default_probes(cfg: &SimConfig, spectrum: Option<&Spectrum>) -> Result<Vec<f64>> {
    let g = &cfg.grid;
    if let Some(p) = cfg.perturbation.as_ref().or(cfg.initial_velocity.as_ref()) {
        let unit = Perturbation {
            amplitude: 1.0,
            shape: p.shape.clone(),
        };
        let v = shape_values(&unit, g, spectrum)?;
        let i = v
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |best, (i, x)| {
                if x.abs() > best.1 {
                    (i, x.abs())
                } else {
                    best
                }
            })
            .0;
        return Ok(vec![g.x(i)]);
    }
    Ok(vec![g.x(g.len() / 2)])
}

fn midpoint_crossing(u: &[f64], grid: &Grid, level: f64, increasing: bool) -> f64 {
    let above = |v: f64| if increasing { v >= level } else { v <= level };
    match u.iter().position(|&v| above(v)) {
        Some(0) | None => f64::NAN,
        Some(i) => {
            let (a, b) = (u[i - 1], u[i]);
            grid.x(i - 1) + grid.spacing() * (level - a) / (b - a)
        }
    }
}

/// Evolves the kink of `nl` plus the configured perturbation. A
/// `DesignatedMode` perturbation takes its shape from `spectrum`.
pub fn evolve(
    nl: &Nonlinearity,
    cfg: &SimConfig,
    spectrum: Option<&Spectrum>,
) -> Result<SimResult> {
    cfg.validate()?;
    let kink = &nl.kink;
    let grid = cfg.grid;
    if *kink.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let n = grid.len();
    let h = grid.spacing();
    let dt = cfg.dt;
    let inv_h2 = 1.0 / (h * h);
    let model = ForceModel::new(nl)?;
    let clamp = cfg.boundary == Boundary::ClampToKink;
    let bar = kink.samples.values();

    let mut u = bar.to_vec();
    let mut v = vec![0.0; n];
    if let Some(p) = &cfg.perturbation {
        for (ui, pi) in u.iter_mut().zip(shape_values(p, &grid, spectrum)?) {
            *ui += pi;
        }
    }
    if let Some(p) = &cfg.initial_velocity {
        v = shape_values(p, &grid, spectrum)?;
    }
    if clamp {
        u[0] = bar[0];
        u[n - 1] = bar[n - 1];
        v[0] = 0.0;
        v[n - 1] = 0.0;
    }

    let positions = if cfg.probe_positions.is_empty() {
        default_probes(cfg, spectrum)?
    } else {
        cfg.probe_positions.clone()
    };
    let mut probes: Vec<ProbeSeries> = positions
        .iter()
        .map(|&x| {
            if !grid.contains(x) {
                return Err(Error::InvalidConfig(format!("probe {x} outside the grid")));
            }
            let node = grid.nearest_node(x);
            Ok(ProbeSeries {
                position: grid.x(node),
                node,
                values: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;

    // end-node weights of the discrete energy: half cells for free ends
    let weight = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let energy = |u: &[f64], v: &[f64]| -> f64 {
        let range = if clamp { 1..n - 1 } else { 0..n };
        let local: f64 = range
            .map(|i| weight(i) * (0.5 * v[i] * v[i] + model.potential(u[i])))
            .sum();
        let gradient: f64 = u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        h * local + 0.5 * gradient / h
    };
    let accel = |u: &[f64], a: &mut [f64]| -> std::result::Result<(), f64> {
        a.par_iter_mut().enumerate().try_for_each(|(i, ai)| {
            *ai = if i == 0 {
                if clamp {
                    0.0
                } else {
                    2.0 * (u[1] - u[0]) * inv_h2 - model.force(u[0])?
                }
            } else if i == n - 1 {
                if clamp {
                    0.0
                } else {
                    2.0 * (u[n - 2] - u[n - 1]) * inv_h2 - model.force(u[n - 1])?
                }
            } else {
                (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2 - model.force(u[i])?
            };
            Ok(())
        })
    };
    let (lo, hi) = nl.domain();
    let out_of_range = |t: f64, u: f64| Error::RangeExceeded { t, u, lo, hi };

    let tracks_center = kink.case == KinkCase::Monotone;
    let level = 0.5 * (bar[0] + bar[n - 1]);
    let increasing = bar[n - 1] > bar[0];
    let mut centers = Vec::new();

    let steps = cfg.steps();
    let mut energies = Vec::with_capacity(steps + 1);
    let mut a = vec![0.0; n];
    accel(&u, &mut a).map_err(|x| out_of_range(0.0, x))?;
    let record = |u: &[f64],
                  v: &[f64],
                  probes: &mut Vec<ProbeSeries>,
                  energies: &mut Vec<f64>,
                  centers: &mut Vec<f64>| {
        for p in probes.iter_mut() {
            p.values.push(u[p.node] - bar[p.node]);
        }
        energies.push(energy(u, v));
        if tracks_center {
            centers.push(midpoint_crossing(u, &grid, level, increasing));
        }
    };
    record(&u, &v, &mut probes, &mut energies, &mut centers);
    let moving = if clamp { 1..n - 1 } else { 0..n };
    for step in 1..=steps {
        let t = step as f64 * dt;
        for i in moving.clone() {
            v[i] += 0.5 * dt * a[i];
            u[i] += dt * v[i];
        }
        accel(&u, &mut a).map_err(|x| out_of_range(t, x))?;
        for i in moving.clone() {
            v[i] += 0.5 * dt * a[i];
        }
        let norm = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !(norm <= BLOWUP_LIMIT) {
            return Err(Error::Instability {
                t,
                limit: BLOWUP_LIMIT,
            });
        }
        record(&u, &v, &mut probes, &mut energies, &mut centers);
    }

    let e0 = energies[0];
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
    let energy_drift = energies.iter().fold(0.0_f64, |m, e| m.max((e - e0).abs())) / scale;
    let drift = u
        .iter()
        .zip(bar)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let perturbed = cfg
        .perturbation
        .iter()
        .chain(&cfg.initial_velocity)
        .any(|p| p.amplitude != 0.0);
    let measured_frequencies = match probes.first() {
        Some(p) if perturbed && p.values.len() >= MIN_SERIES_LEN => {
            measure_frequencies(&p.values, dt)?
        }
        _ => Vec::new(),
    };
    Ok(SimResult {
        dt,
        final_field: SampledFunction::new(grid, u)?,
        drift,
        probes,
        energy_series: energies,
        energy_drift,
        measured_frequencies,
        center_series: tracks_center.then_some(centers),
    })
}

/// Least-squares line through `(t, y)`: returns `(slope, r_squared)`.
pub fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}
