//! Tracking error and smoothness metrics.

use crate::error::{domain, Result};

/// Root-mean-square difference of two equal-length series.
pub fn rmse(desired: &[f64], actual: &[f64]) -> Result<f64> {
    if desired.len() != actual.len() || desired.is_empty() {
        return domain(format!("rmse needs equal non-empty series, got {} and {}", desired.len(), actual.len()));
    }
    let ss: f64 = desired.iter().zip(actual).map(|(d, a)| (d - a) * (d - a)).sum();
    Ok((ss / desired.len() as f64).sqrt())
}

/// RMS of the third derivative, estimated by three successive first
/// differences divided by `dt^3` (stencil `[-1, 3, -3, 1]`).
pub fn rms_jerk(series: &[f64], dt: f64) -> Result<f64> {
    if series.len() < 4 {
        return domain(format!("rms jerk needs at least 4 samples, got {}", series.len()));
    }
    if !(dt > 0.0) {
        return domain(format!("dt must be > 0, got {dt}"));
    }
    let diff = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| w[1] - w[0]).collect() };
    let d3 = diff(&diff(&diff(series)));
    let dt3 = dt * dt * dt;
    let ms: f64 = d3.iter().map(|d| (d / dt3).powi(2)).sum::<f64>() / d3.len() as f64;
    Ok(ms.sqrt())
}

/// `A sin(2 pi t / T)`.
pub fn desired_trajectory(t: f64, amplitude: f64, period: f64) -> Result<f64> {
    if !(period > 0.0) {
        return domain(format!("period must be > 0, got {period}"));
    }
    Ok(amplitude * (std::f64::consts::TAU * t / period).sin())
}

/// Mean absolute difference of two equal-length series.
pub fn mean_abs_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return domain(format!("mean error needs equal non-empty series, got {} and {}", a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}
