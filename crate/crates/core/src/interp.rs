//! Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes with
//! the Fritsch-Butland weighted harmonic mean) and its inversion.
//!
//! Slopes are computed locally from the two adjacent secants, so a single
//! evaluation only touches four samples. Within one cell a monotone data pair
//! yields a monotone cubic, which is what makes per-cell inversion by
//! bracketing safe.

use crate::error::{Error, Result};

/// Slope at node `i` for data `(xs, ys)`. `xs` strictly increasing, `len >= 2`.
pub fn pchip_slope(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let n = xs.len();
    debug_assert!(n >= 2 && i < n);
    let secant = |k: usize| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    let width = |k: usize| xs[k + 1] - xs[k];
    if n == 2 {
        return secant(0);
    }
    if i == 0 {
        return edge_slope(width(0), width(1), secant(0), secant(1));
    }
    if i == n - 1 {
        return edge_slope(width(n - 2), width(n - 3), secant(n - 2), secant(n - 3));
    }
    let (d0, d1) = (secant(i - 1), secant(i));
    if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
        return 0.0;
    }
    let (h0, h1) = (width(i - 1), width(i));
    let w1 = 2.0 * h1 + h0;
    let w2 = h1 + 2.0 * h0;
    (w1 + w2) / (w1 / d0 + w2 / d1)
}

// Three-point one-sided slope, limited so the end cell stays shape preserving.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Slope at node `i` of uniformly spaced samples `ys` with spacing `h`.
/// Same limiter as [`pchip_slope`], specialized to equal widths.
pub fn uniform_slope(ys: &[f64], i: usize, h: f64) -> f64 {
    let n = ys.len();
    debug_assert!(n >= 2 && i < n);
    let secant = |k: usize| (ys[k + 1] - ys[k]) / h;
    if n == 2 {
        return secant(0);
    }
    if i == 0 {
        return edge_slope(h, h, secant(0), secant(1));
    }
    if i == n - 1 {
        return edge_slope(h, h, secant(n - 2), secant(n - 3));
    }
    let (d0, d1) = (secant(i - 1), secant(i));
    if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
        return 0.0;
    }
    2.0 / (1.0 / d0 + 1.0 / d1)
}

/// Cubic Hermite value on `[x0, x1]` with end values and end slopes.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of [`hermite`] with respect to `x`.
#[inline]
pub fn hermite_derivative(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Integral of [`hermite`] from `x0` to `x`.
#[inline]
pub fn hermite_integral(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let i00 = s - s3 + 0.5 * s4;
    let i10 = 0.5 * s2 - 2.0 * s3 / 3.0 + 0.25 * s4;
    let i01 = s3 - 0.5 * s4;
    let i11 = -s3 / 3.0 + 0.25 * s4;
    h * (i00 * y0 + i10 * h * d0 + i01 * y1 + i11 * h * d1)
}

/// Direction of a strictly monotone sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Checks strict monotonicity: every consecutive difference must share one sign
/// and exceed `1e-14 * max|diff|` in magnitude.
pub fn check_strictly_monotone(ys: &[f64]) -> Result<Direction> {
    if ys.len() < 2 {
        return Err(Error::InvalidSamples("need at least two samples".into()));
    }
    let max_diff = ys
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0_f64, f64::max);
    let tol = 1e-14 * max_diff;
    let first = ys[1] - ys[0];
    let dir = if first > 0.0 {
        Direction::Increasing
    } else {
        Direction::Decreasing
    };
    for (i, w) in ys.windows(2).enumerate() {
        let d = w[1] - w[0];
        let ok = match dir {
            Direction::Increasing => d > tol,
            Direction::Decreasing => -d > tol,
        };
        if !ok || max_diff == 0.0 {
            return Err(Error::NotMonotone { index: i, diff: d });
        }
    }
    Ok(dir)
}

/// Precomputed monotone cubic interpolant over arbitrary increasing abscissae.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidSamples(
                "abscissae and ordinates must have equal length >= 2".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSamples(
                "abscissae must be strictly increasing".into(),
            ));
        }
        let ds = (0..xs.len()).map(|i| pchip_slope(&xs, &ys, i)).collect();
        Ok(Pchip { xs, ys, ds })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn cell(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfRange { value: x, lo, hi });
        }
        let j = self.cell(x);
        if x == self.xs[j] {
            return Ok(self.ys[j]);
        }
        if x == self.xs[j + 1] {
            return Ok(self.ys[j + 1]);
        }
        Ok(hermite(
            self.xs[j],
            self.xs[j + 1],
            self.ys[j],
            self.ys[j + 1],
            self.ds[j],
            self.ds[j + 1],
            x,
        ))
    }
}

/// Solves `hermite(x) = y` on one cell whose end values bracket `y`, by
/// Newton steps safeguarded with bisection.
#[allow(clippy::too_many_arguments)]
pub fn solve_in_cell(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    d0: f64,
    d1: f64,
    y: f64,
    ytol: f64,
) -> f64 {
    if y == y0 {
        return x0;
    }
    if y == y1 {
        return x1;
    }
    let increasing = y1 > y0;
    let g = |x: f64| {
        let v = hermite(x0, x1, y0, y1, d0, d1, x) - y;
        if increasing {
            v
        } else {
            -v
        }
    };
    let (mut a, mut b) = (x0, x1);
    let mut x = x0 + (x1 - x0) * (y - y0) / (y1 - y0);
    for _ in 0..100 {
        let gx = g(x);
        if gx.abs() <= ytol {
            return x;
        }
        if gx > 0.0 {
            b = x;
        } else {
            a = x;
        }
        if b - a <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return 0.5 * (a + b);
        }
        let slope = hermite_derivative(x0, x1, y0, y1, d0, d1, x);
        let slope = if increasing { slope } else { -slope };
        let newton = if slope > 0.0 {
            x - gx / slope
        } else {
            f64::NAN
        };
        x = if newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    x
}
