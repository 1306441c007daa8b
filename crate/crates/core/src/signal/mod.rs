//! Multichannel signal preprocessing and feature extraction.

pub mod features;
pub mod io;
pub mod spectral;
pub mod stats;
pub mod sync;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{
    build_feature_sets, default_channels, FeatureBlock, FeatureLayout, FeatureManifest, FeatureMatrix, FeatureSet,
    DEFAULT_CHANNELS_ONE_BASED,
};
pub use spectral::{
    analytic_signal, band_power_psd, bandpass_gain_sq, butterworth_bandpass, instantaneous_phase, lowpass_gain_sq,
    one_sided_power, DEFAULT_BUTTERWORTH_ORDER, MAX_BUTTERWORTH_ORDER,
};
pub use stats::{channel_stats, differential_entropy, segment_diff, segment_stats, ChannelStats, SegmentStats};
pub use sync::{lagged_correlation, plv, plv_from_phases, CorrelationMeans};

/// One trial: `C × T` samples plus acquisition metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSignal {
    samples: DMatrix<f64>,
    sampling_rate: f64,
    pretrial_seconds: f64,
}

impl TrialSignal {
    pub fn new(samples: DMatrix<f64>, sampling_rate: f64, pretrial_seconds: f64) -> Result<Self> {
        if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
            return Err(Error::InvalidSignal(format!("sampling rate must be positive, got {sampling_rate}")));
        }
        if !(pretrial_seconds.is_finite() && pretrial_seconds >= 0.0) {
            return Err(Error::InvalidSignal(format!(
                "pretrial seconds must be nonnegative, got {pretrial_seconds}"
            )));
        }
        if samples.nrows() == 0 {
            return Err(Error::InvalidSignal("signal has no channels".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal samples"));
        }
        let t = samples.ncols() as f64;
        if t <= pretrial_seconds * sampling_rate {
            return Err(Error::InvalidSignal(format!(
                "{} samples do not extend past the {pretrial_seconds} s pre-trial period",
                samples.ncols()
            )));
        }
        Ok(Self { samples, sampling_rate, pretrial_seconds })
    }

    /// Builds a trial from per-channel sample vectors.
    pub fn from_channels(channels: &[Vec<f64>], sampling_rate: f64, pretrial_seconds: f64) -> Result<Self> {
        let c = channels.len();
        let t = channels.first().map_or(0, Vec::len);
        if let Some(bad) = channels.iter().position(|ch| ch.len() != t) {
            return Err(Error::InvalidSignal(format!(
                "channel {} has {} samples, expected {t}",
                bad + 1,
                channels[bad].len()
            )));
        }
        let samples = DMatrix::from_fn(c, t, |i, j| channels[i][j]);
        Self::new(samples, sampling_rate, pretrial_seconds)
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn pretrial_seconds(&self) -> f64 {
        self.pretrial_seconds
    }

    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }

    /// Number of leading samples removed as pre-trial.
    pub fn pretrial_samples(&self) -> usize {
        (self.pretrial_seconds * self.sampling_rate).round() as usize
    }

    /// Samples of `channel` after the pre-trial period.
    pub fn post_pretrial(&self, channel: usize) -> Result<Vec<f64>> {
        if channel >= self.n_channels() {
            return Err(Error::InvalidParameter(format!(
                "channel index {channel} out of range for {} channels",
                self.n_channels()
            )));
        }
        let skip = self.pretrial_samples();
        Ok(self.samples.row(channel).iter().skip(skip).copied().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_seconds: f64,
    pub stride_seconds: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { window_seconds: 2.0, stride_seconds: 0.5 }
    }
}

fn whole_samples(seconds: f64, fs: f64, what: &str) -> Result<usize> {
    let raw = seconds * fs;
    let rounded = raw.round();
    if !(raw.is_finite() && rounded >= 1.0 && (raw - rounded).abs() <= 1e-9 * rounded.max(1.0)) {
        return Err(Error::InvalidParameter(format!(
            "{what} of {seconds} s is not a positive whole number of samples at {fs} Hz"
        )));
    }
    Ok(rounded as usize)
}

impl WindowSpec {
    /// Window and stride lengths in samples.
    pub fn in_samples(&self, fs: f64) -> Result<(usize, usize)> {
        Ok((
            whole_samples(self.window_seconds, fs, "window")?,
            whole_samples(self.stride_seconds, fs, "stride")?,
        ))
    }
}

/// Start offsets of windows of `window` samples at `stride` over `len` samples.
pub fn window_starts(len: usize, window: usize, stride: usize) -> Result<Vec<usize>> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidParameter("window and stride must be positive".into()));
    }
    if window > len {
        return Err(Error::InvalidSignal(format!(
            "window of {window} samples is longer than the {len} post-pretrial samples"
        )));
    }
    Ok((0..=(len - window) / stride).map(|i| i * stride).collect())
}

/// One window of all channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Offset of the first sample, counted after the pre-trial drop.
    pub start: usize,
    /// `C × W` samples.
    pub data: DMatrix<f64>,
}

/// Drops the pre-trial samples and cuts the remainder into windows.
pub fn segment(signal: &TrialSignal, spec: &WindowSpec) -> Result<Vec<Segment>> {
    let (w, s) = spec.in_samples(signal.sampling_rate())?;
    let skip = signal.pretrial_samples();
    let starts = window_starts(signal.n_samples() - skip, w, s)?;
    Ok(starts
        .into_iter()
        .map(|start| Segment {
            start,
            data: signal.samples().columns(skip + start, w).into_owned(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 4] = [Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    pub fn as_str(&self) -> &'static str {
        match self {
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Band::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown band '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandDef {
    pub name: Band,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandDef {
    pub fn default_for(name: Band) -> Self {
        let (low_hz, high_hz) = match name {
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 13.0),
            Band::Beta => (13.0, 30.0),
            Band::Gamma => (30.0, 45.0),
        };
        Self { name, low_hz, high_hz }
    }

    /// Theta, alpha, beta and gamma with their default edges.
    pub fn defaults() -> Vec<BandDef> {
        Band::ALL.into_iter().map(Self::default_for).collect()
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < fs / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "band {} [{}, {}] Hz must satisfy 0 < low < high < {} Hz",
                self.name,
                self.low_hz,
                self.high_hz,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(t: usize) -> TrialSignal {
        let samples = DMatrix::from_fn(2, t, |i, j| (i * t + j) as f64);
        TrialSignal::new(samples, 128.0, 3.0).unwrap()
    }

    #[test]
    fn default_segmentation_count() {
        let segs = segment(&trial(8064), &WindowSpec::default()).unwrap();
        assert_eq!(segs.len(), 117);
        assert!(segs.iter().all(|s| s.data.shape() == (2, 256)));
        assert_eq!(segs[1].start, 64);
        // first post-pretrial sample of channel 0
        assert_eq!(segs[0].data[(0, 0)], 384.0);
    }

    #[test]
    fn short_window_count() {
        let spec = WindowSpec { window_seconds: 0.5, stride_seconds: 0.125 };
        assert_eq!(segment(&trial(8064), &spec).unwrap().len(), 477);
    }

    #[test]
    fn exact_fit_gives_one_segment() {
        let segs = segment(&trial(384 + 256), &WindowSpec::default()).unwrap();
        assert_eq!(segs.len(), 1);
    }

    #[test]
    fn window_longer_than_signal() {
        assert!(segment(&trial(384 + 255), &WindowSpec::default()).is_err());
    }

    #[test]
    fn non_integral_window_rejected() {
        let spec = WindowSpec { window_seconds: 2.0, stride_seconds: 0.3 };
        assert!(spec.in_samples(128.0).is_err());
    }

    #[test]
    fn trial_validation() {
        assert!(TrialSignal::new(DMatrix::zeros(1, 384), 128.0, 3.0).is_err());
        assert!(TrialSignal::new(DMatrix::zeros(1, 385), 0.0, 3.0).is_err());
        let mut m = DMatrix::zeros(1, 400);
        m[(0, 3)] = f64::NAN;
        assert!(TrialSignal::new(m, 128.0, 3.0).is_err());
        assert!(TrialSignal::from_channels(&[vec![0.0; 5], vec![0.0; 4]], 1.0, 0.0).is_err());
    }

    #[test]
    fn band_parsing_and_validation() {
        assert_eq!("Alpha".parse::<Band>().unwrap(), Band::Alpha);
        assert!("delta".parse::<Band>().is_err());
        assert!(BandDef::default_for(Band::Gamma).validate(80.0).is_err());
        assert!(BandDef::default_for(Band::Gamma).validate(128.0).is_ok());
    }
}
