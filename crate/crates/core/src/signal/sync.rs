//! Pairwise synchronization: phase locking value and lagged correlation.

use serde::{Deserialize, Serialize};

use super::spectral::instantaneous_phase;
use crate::error::{Error, Result};

pub const MIN_PLV_SAMPLES: usize = 4;

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal samples"));
    }
    Ok(())
}

/// `|mean(exp(i(φx - φy)))|` over two phase series.
pub fn plv_from_phases(phase_x: &[f64], phase_y: &[f64]) -> Result<f64> {
    if phase_x.len() != phase_y.len() {
        return Err(Error::DimensionMismatch { expected: phase_x.len(), actual: phase_y.len() });
    }
    if phase_x.is_empty() {
        return Err(Error::DegenerateSegment("empty phase series"));
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (a, b) in phase_x.iter().zip(phase_y) {
        let (s, c) = (a - b).sin_cos();
        re += c;
        im += s;
    }
    let n = phase_x.len() as f64;
    Ok((re / n).hypot(im / n).min(1.0))
}

/// Phase locking value from analytic-signal phases of two equal-length
/// segments. The caller band-limits the inputs.
pub fn plv(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if x.len() < MIN_PLV_SAMPLES {
        return Err(Error::DegenerateSegment("PLV needs at least 4 samples"));
    }
    plv_from_phases(&instantaneous_phase(x), &instantaneous_phase(y))
}

/// Which means are subtracted in [`lagged_correlation`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMeans {
    /// Means over the whole segments.
    #[default]
    FullSeries,
    /// Means over the overlapping parts only.
    Overlap,
}

/// Normalized cross-correlation at lag `tau`:
/// `Σ (x(t)-x̄)(y(t+τ)-ȳ) / sqrt(Σ (x(t)-x̄)² Σ (y(t+τ)-ȳ)²)` with the sums
/// over `t = 0 .. T-τ`.
pub fn lagged_correlation(x: &[f64], y: &[f64], tau: usize, means: CorrelationMeans) -> Result<f64> {
    check_pair(x, y)?;
    if tau >= x.len() || x.len() - tau < 2 {
        return Err(Error::InvalidParameter(format!(
            "lag {tau} leaves fewer than 2 overlapping samples of {}",
            x.len()
        )));
    }
    let overlap = x.len() - tau;
    let xs = &x[..overlap];
    let ys = &y[tau..];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (mx, my) = match means {
        CorrelationMeans::FullSeries => (mean(x), mean(y)),
        CorrelationMeans::Overlap => (mean(xs), mean(ys)),
    };
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in xs.iter().zip(ys) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateSegment("zero variance in lagged correlation"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
