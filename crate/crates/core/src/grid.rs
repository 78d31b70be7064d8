//! Uniform 1D meshes and functions sampled on them.
//!
//! Every other module works on [`SampledFunction`]s: cumulative trapezoid
//! quadrature, second-order differentiation, and monotone cubic interpolation
//! and inversion all live here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{self, Direction};

/// Uniform mesh on `[x_min, x_max]` with `n_points` nodes (both ends included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if !(x_min < x_max) {
            return Err(Error::InvalidGrid(format!(
                "x_min ({x_min}) must be below x_max ({x_max})"
            )));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        Ok(Grid {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Grid::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    /// Coordinate of node `i`, computed from the index (no accumulated sums).
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_points - 1 {
            return self.x_max;
        }
        self.x_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Grid with half the spacing over the same interval; node `i` of `self`
    /// is node `2i` of the result.
    pub fn refined(&self) -> Grid {
        Grid {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }

    /// Index of the node nearest to `x`; exact midpoints go to the lower index.
    pub fn nearest_node(&self, x: f64) -> usize {
        let s = (x - self.x_min) / self.spacing();
        let below = s.floor().clamp(0.0, (self.n_points - 1) as f64) as usize;
        if below + 1 < self.n_points && (s - below as f64) > 0.5 {
            below + 1
        } else {
            below
        }
    }

    /// Index `j` of the cell `[x_j, x_{j+1}]` containing `x` (clamped).
    pub fn cell_of(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.spacing()).floor();
        (s.max(0.0) as usize).min(self.n_points - 2)
    }
}

/// Real values sampled at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

/// Contiguous node range `[lo, hi]` on which a sampled function is strictly
/// monotone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneWindow {
    pub lo: usize,
    pub hi: usize,
    pub increasing: bool,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSamples(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples(format!(
                "non-finite value at node {i}"
            )));
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        SampledFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise map, keeping the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        SampledFunction::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Running composite-trapezoid integral from the left edge; zero at `x_min`.
    pub fn cumulative_integral(&self) -> SampledFunction {
        let h = self.grid.spacing();
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        SampledFunction {
            grid: self.grid,
            values: out,
        }
    }

    /// Central differences inside, second-order one-sided stencils at the ends.
    pub fn derivative(&self) -> SampledFunction {
        let h = self.grid.spacing();
        let v = &self.values;
        let n = v.len();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        SampledFunction {
            grid: self.grid,
            values: d,
        }
    }

    /// Monotone cubic interpolation at `x`; nodes are reproduced exactly.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        self.interpolate_within(0, self.values.len() - 1, x)
    }

    /// Interpolation using only the samples in `[lo, hi]` (slopes included).
    pub fn interpolate_within(&self, lo: usize, hi: usize, x: f64) -> Result<f64> {
        let (a, b) = (self.grid.x(lo), self.grid.x(hi));
        if !(x >= a && x <= b) {
            return Err(Error::OutOfRange {
                value: x,
                lo: a,
                hi: b,
            });
        }
        let h = self.grid.spacing();
        let j = self.grid.cell_of(x).clamp(lo, hi - 1);
        let (x0, x1) = (self.grid.x(j), self.grid.x(j + 1));
        if x == x0 {
            return Ok(self.values[j]);
        }
        if x == x1 {
            return Ok(self.values[j + 1]);
        }
        let window = &self.values[lo..=hi];
        let d0 = interp::uniform_slope(window, j - lo, h);
        let d1 = interp::uniform_slope(window, j + 1 - lo, h);
        Ok(interp::hermite(
            x0,
            x1,
            self.values[j],
            self.values[j + 1],
            d0,
            d1,
            x,
        ))
    }

    /// Checks strict monotonicity of the samples on `[lo, hi]`.
    pub fn monotone_window(&self, lo: usize, hi: usize) -> Result<MonotoneWindow> {
        if hi <= lo || hi >= self.values.len() {
            return Err(Error::InvalidSamples(format!("bad window [{lo}, {hi}]")));
        }
        let dir = interp::check_strictly_monotone(&self.values[lo..=hi]).map_err(|e| match e {
            Error::NotMonotone { index, diff } => Error::NotMonotone {
                index: index + lo,
                diff,
            },
            other => other,
        })?;
        Ok(MonotoneWindow {
            lo,
            hi,
            increasing: dir == Direction::Increasing,
        })
    }

    /// Inverse of the monotone cubic interpolant over the whole grid.
    pub fn invert_monotone(&self, y: f64) -> Result<f64> {
        let w = self.monotone_window(0, self.values.len() - 1)?;
        self.invert_in_window(&w, y)
    }

    /// Inverse restricted to a previously validated monotone window. Locates
    /// the bracketing cell by binary search and solves within it.
    pub fn invert_in_window(&self, w: &MonotoneWindow, y: f64) -> Result<f64> {
        let vals = &self.values[w.lo..=w.hi];
        let (first, last) = (vals[0], vals[vals.len() - 1]);
        let (ymin, ymax) = if w.increasing {
            (first, last)
        } else {
            (last, first)
        };
        if !(y >= ymin && y <= ymax) {
            return Err(Error::OutOfRange {
                value: y,
                lo: ymin,
                hi: ymax,
            });
        }
        // number of samples on the "below y" side in the window's own order
        let k = if w.increasing {
            vals.partition_point(|&v| v < y)
        } else {
            vals.partition_point(|&v| v > y)
        };
        let j = k.saturating_sub(1).min(vals.len() - 2);
        let h = self.grid.spacing();
        let d0 = interp::uniform_slope(vals, j, h);
        let d1 = interp::uniform_slope(vals, j + 1, h);
        let x0 = self.grid.x(w.lo + j);
        let x1 = self.grid.x(w.lo + j + 1);
        let ytol = 1e-14 * (ymax - ymin);
        Ok(interp::solve_in_cell(
            x0,
            x1,
            vals[j],
            vals[j + 1],
            d0,
            d1,
            y,
            ytol,
        ))
    }

    /// Two-column CSV with header `x,value`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 48);
        s.push_str("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{}\n", fmt17(self.grid.x(i)), fmt17(*v)));
        }
        s
    }
}

/// Formats with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses a two-column numeric CSV (optional header) into abscissae and values.
pub fn parse_two_column_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = match (cols.next(), cols.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )))
            }
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if xs.is_empty() && lineno == 0 => continue, // header
            _ => {
                return Err(Error::Parse(format!(
                    "line {}: could not parse '{line}'",
                    lineno + 1
                )))
            }
        }
    }
    if xs.len() < 2 {
        return Err(Error::Parse("need at least two data rows".into()));
    }
    Ok((xs, ys))
}
