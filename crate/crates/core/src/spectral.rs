//! Oscillation frequencies of a sampled time series.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_SERIES_LEN: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyPeak {
    /// Angular frequency.
    pub omega: f64,
    pub peak_power: f64,
}

/// One-sided power of the mean-removed, Hann-windowed series zero-padded to
/// at least four times its length. Returns `(omega, power)` per bin.
pub fn power_spectrum(series: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::TooShort {
            len: series.len(),
            min: MIN_SERIES_LEN,
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("time step {dt} must be > 0")));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let padded = (4 * n).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); padded];
    for (k, &v) in series.iter().enumerate() {
        let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos());
        buf[k] = Complex::new((v - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let half = padded / 2;
    let scale = 2.0 * std::f64::consts::PI / (padded as f64 * dt);
    let omega = (0..=half).map(|k| k as f64 * scale).collect();
    let power = buf[..=half].iter().map(|c| c.norm_sqr()).collect();
    Ok((omega, power))
}

/// Local maxima of the power spectrum above ten times its median and above
/// `1e-3` of the strongest bin, refined by a parabola through the log-power of
/// the peak bin and its neighbours. Ordered by decreasing power; empty when
/// the series is constant up to rounding.
pub fn measure_frequencies(series: &[f64], dt: f64) -> Result<Vec<FrequencyPeak>> {
    let (omega, power) = power_spectrum(series, dt)?;
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let spread = series.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    if spread <= 8.0 * f64::EPSILON * mean.abs() {
        return Ok(Vec::new());
    }
    let bins = &power[1..];
    let max = bins.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return Ok(Vec::new());
    }
    let mut sorted = bins.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let floor = (10.0 * median).max(1e-3 * max);
    let step = omega[1];
    let mut peaks = Vec::new();
    for k in 1..power.len() - 1 {
        let (a, b, c) = (power[k - 1], power[k], power[k + 1]);
        if !(b > a && b >= c && b > floor) {
            continue;
        }
        let (la, lb, lc) = (
            a.max(f64::MIN_POSITIVE).ln(),
            b.ln(),
            c.max(f64::MIN_POSITIVE).ln(),
        );
        let curvature = la - 2.0 * lb + lc;
        let delta = if curvature < 0.0 {
            (0.5 * (la - lc) / curvature).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        peaks.push(FrequencyPeak {
            omega: (k as f64 + delta) * step,
            peak_power: (lb - 0.25 * (la - lc) * delta).exp(),
        });
    }
    peaks.sort_by(|p, q| q.peak_power.total_cmp(&p.peak_power));
    Ok(peaks)
}
