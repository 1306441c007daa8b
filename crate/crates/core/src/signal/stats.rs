//! Per-segment and per-channel descriptive statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names of the [`SegmentStats`] fields in [`SegmentStats::to_array`] order.
pub const SEGMENT_STAT_NAMES: [&str; 7] = ["min", "max", "range", "mean", "var", "skew", "kurt"];

/// Names of the [`ChannelStats`] fields in [`ChannelStats::to_array`] order.
pub const CHANNEL_STAT_NAMES: [&str; 9] =
    ["min", "max", "range", "mean", "var", "skew", "kurt", "argmin", "argmax"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Population skewness `m3 / m2^{3/2}`; 0 for constant input.
    pub skewness: f64,
    /// Population (non-excess) kurtosis `m4 / m2²`; 0 for constant input.
    pub kurtosis: f64,
}

impl SegmentStats {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.min,
            self.max,
            self.range,
            self.mean,
            self.variance,
            self.skewness,
            self.kurtosis,
        ]
    }
}

fn central_moments(x: &[f64], mean: f64) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

pub fn segment_stats(x: &[f64]) -> Result<SegmentStats> {
    if x.len() < 2 {
        return Err(Error::DegenerateSegment("statistics need at least 2 samples"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("segment samples"));
    }
    let n = x.len() as f64;
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = x.iter().sum::<f64>() / n;
    let (m2, m3, m4) = central_moments(x, mean);
    // Rounding in the mean leaves a tiny m2 for constant input.
    let scale = min.abs().max(max.abs());
    let flat = max == min || m2 <= (1e-14 * scale).powi(2);
    let (skewness, kurtosis) = if flat {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    };
    Ok(SegmentStats {
        min,
        max,
        range: max - min,
        mean,
        variance: if flat { 0.0 } else { m2 * n / (n - 1.0) },
        skewness,
        kurtosis,
    })
}

/// Element-wise `later - earlier` of two statistics tuples of the same
/// channel and band.
pub fn segment_diff(earlier: &SegmentStats, later: &SegmentStats) -> SegmentStats {
    SegmentStats {
        min: later.min - earlier.min,
        max: later.max - earlier.max,
        range: later.range - earlier.range,
        mean: later.mean - earlier.mean,
        variance: later.variance - earlier.variance,
        skewness: later.skewness - earlier.skewness,
        kurtosis: later.kurtosis - earlier.kurtosis,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub stats: SegmentStats,
    /// Index of the first minimum divided by `len - 1`.
    pub argmin: f64,
    /// Index of the first maximum divided by `len - 1`.
    pub argmax: f64,
}

impl ChannelStats {
    pub fn to_array(&self) -> [f64; 9] {
        let s = self.stats.to_array();
        [s[0], s[1], s[2], s[3], s[4], s[5], s[6], self.argmin, self.argmax]
    }
}

pub fn channel_stats(x: &[f64]) -> Result<ChannelStats> {
    let stats = segment_stats(x)?;
    let scale = (x.len() - 1) as f64;
    let argmin = x.iter().position(|&v| v == stats.min).unwrap_or(0);
    let argmax = x.iter().position(|&v| v == stats.max).unwrap_or(0);
    Ok(ChannelStats {
        stats,
        argmin: argmin as f64 / scale,
        argmax: argmax as f64 / scale,
    })
}

/// Gaussian differential entropy `½ ln(2πe σ²)` with the unbiased variance.
pub fn differential_entropy(x: &[f64]) -> Result<f64> {
    let stats = segment_stats(x)?;
    if stats.variance <= 0.0 {
        return Err(Error::DegenerateSegment("zero variance in differential entropy"));
    }
    Ok(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * stats.variance).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_example() {
        let s = segment_stats(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.min, s.max, s.range, s.mean), (1.0, 4.0, 3.0, 2.5));
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!(s.skewness.abs() < 1e-15);
        // m2 = 1.25, m4 = (2*5.0625 + 2*0.0625)/4 = 2.5625
        assert!((s.kurtosis - 2.5625 / 1.5625).abs() < 1e-14);
    }

    #[test]
    fn constant_segment() {
        let s = segment_stats(&[0.1; 9]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.kurtosis, 0.0);
        assert!(differential_entropy(&[0.1; 9]).is_err());
    }

    #[test]
    fn skewed_sample() {
        let s = segment_stats(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        // mean 1/4, m2 = 3/16, m3 = (3*(-1/64) + 27/64)/4 = 6/64
        let expected = (6.0 / 64.0) / (3.0f64 / 16.0).powf(1.5);
        assert!((s.skewness - expected).abs() < 1e-14);
    }

    #[test]
    fn diff_is_elementwise() {
        let a = segment_stats(&[1.0, 2.0, 3.0]).unwrap();
        let b = segment_stats(&[2.0, 4.0, 9.0]).unwrap();
        let d = segment_diff(&a, &b);
        for ((x, y), z) in a.to_array().iter().zip(b.to_array()).zip(d.to_array()) {
            assert_eq!(z, y - x);
        }
        assert!(segment_diff(&a, &a).to_array().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn channel_arg_positions() {
        let c = channel_stats(&[3.0, -1.0, 5.0, 5.0, 0.0]).unwrap();
        assert_eq!(c.argmin, 0.25);
        assert_eq!(c.argmax, 0.5);
    }

    #[test]
    fn entropy_of_unit_variance() {
        let x = [-1.0, 1.0];
        // unbiased variance 2
        let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 2.0).ln();
        assert!((differential_entropy(&x).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn too_short() {
        assert!(segment_stats(&[]).is_err());
        assert!(segment_stats(&[1.0]).is_err());
    }
}
