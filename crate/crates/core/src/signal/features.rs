//! Feature sets 1-4 built per window of a trial.
//!
//! Column layout, each set extending the previous one:
//!
//! | set | block | columns | name pattern |
//! |-----|-------|---------|--------------|
//! | 1 | `psd`  | C·B    | `psd_ch01_theta` |
//! | 1 | `de`   | C·B    | `de_ch01_theta` |
//! | 2 | `seg`  | C·B·7  | `seg_mean_ch01_theta` |
//! | 2 | `diff` | C·B·7  | `diff_mean_ch01_theta` |
//! | 3 | `chan` | C·9    | `chan_argmax_ch01` |
//! | 4 | `plv`  | P·B    | `plv_ch01_ch02_theta` |
//! | 4 | `corr` | P·L    | `corr_ch01_ch02_lag32` |
//!
//! `C` channels, `B` bands, `P = C(C-1)/2` channel pairs, `L` correlation
//! lags. Channels are labelled by their 1-based position in the recording.
//! Within a block the loops run channel (or pair), then band (or lag), then
//! statistic. `psd` and `corr` use the raw window, `de`, `seg`, `diff` and
//! `plv` the band-filtered window, and `chan` the whole post-pretrial channel,
//! repeated on every row. The `diff` row of the first window is zero.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::spectral::{band_power_psd, butterworth_bandpass, instantaneous_phase, DEFAULT_BUTTERWORTH_ORDER};
use super::stats::{
    channel_stats, differential_entropy, segment_diff, segment_stats, SegmentStats, CHANNEL_STAT_NAMES,
    SEGMENT_STAT_NAMES,
};
use super::sync::{lagged_correlation, plv_from_phases, CorrelationMeans};
use super::{window_starts, BandDef, TrialSignal, WindowSpec};
use crate::error::{Error, Result};

/// Default electrode selection, 1-based as in the recording layout.
pub const DEFAULT_CHANNELS_ONE_BASED: [usize; 14] = [1, 2, 3, 4, 6, 11, 13, 17, 19, 20, 21, 25, 29, 31];

/// [`DEFAULT_CHANNELS_ONE_BASED`] as 0-based indices.
pub fn default_channels() -> Vec<usize> {
    DEFAULT_CHANNELS_ONE_BASED.iter().map(|c| c - 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Set1,
    Set2,
    Set3,
    Set4,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [FeatureSet::Set1, FeatureSet::Set2, FeatureSet::Set3, FeatureSet::Set4];

    pub fn number(&self) -> u8 {
        *self as u8 + 1
    }

    /// Column count for a given channel, band and lag configuration.
    pub fn column_count(&self, channels: usize, bands: usize, lags: usize) -> usize {
        let pairs = channels * channels.saturating_sub(1) / 2;
        let mut total = 2 * channels * bands;
        if *self >= FeatureSet::Set2 {
            total += 2 * SEGMENT_STAT_NAMES.len() * channels * bands;
        }
        if *self >= FeatureSet::Set3 {
            total += CHANNEL_STAT_NAMES.len() * channels;
        }
        if *self >= FeatureSet::Set4 {
            total += pairs * (bands + lags);
        }
        total
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "set{}", self.number())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let digits = lower.strip_prefix("set").unwrap_or(&lower);
        match digits {
            "1" => Ok(FeatureSet::Set1),
            "2" => Ok(FeatureSet::Set2),
            "3" => Ok(FeatureSet::Set3),
            "4" => Ok(FeatureSet::Set4),
            _ => Err(Error::InvalidParameter(format!("unknown feature set '{s}'"))),
        }
    }
}

/// Layout constants that the feature sets leave open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub bands: Vec<BandDef>,
    pub filter_order: u32,
    /// Correlation lags in samples; `None` means `{0, fs/4}`.
    pub correlation_lags: Option<Vec<usize>>,
    pub correlation_means: CorrelationMeans,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self {
            bands: BandDef::defaults(),
            filter_order: DEFAULT_BUTTERWORTH_ORDER,
            correlation_lags: None,
            correlation_means: CorrelationMeans::FullSeries,
        }
    }
}

impl FeatureLayout {
    pub fn lags(&self, fs: f64) -> Vec<usize> {
        self.correlation_lags
            .clone()
            .unwrap_or_else(|| vec![0, (fs / 4.0).round() as usize])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub name: String,
    pub columns: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: DMatrix<f64>,
    feature_names: Vec<String>,
    set: FeatureSet,
    blocks: Vec<FeatureBlock>,
}

impl FeatureMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn set(&self) -> FeatureSet {
        self.set
    }

    pub fn blocks(&self) -> &[FeatureBlock] {
        &self.blocks
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

/// Sidecar description of an extracted feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub set: FeatureSet,
    pub channels_one_based: Vec<usize>,
    pub window: WindowSpec,
    pub window_samples: usize,
    pub stride_samples: usize,
    pub sampling_rate: f64,
    pub bands: Vec<BandDef>,
    pub filter_order: u32,
    pub correlation_lags: Vec<usize>,
    pub correlation_means: CorrelationMeans,
    pub blocks: Vec<FeatureBlock>,
    pub n_features: usize,
    pub n_rows: usize,
}

impl FeatureManifest {
    pub fn new(
        matrix: &FeatureMatrix,
        channels: &[usize],
        spec: &WindowSpec,
        sampling_rate: f64,
        layout: &FeatureLayout,
    ) -> Result<Self> {
        let (window_samples, stride_samples) = spec.in_samples(sampling_rate)?;
        Ok(Self {
            set: matrix.set,
            channels_one_based: channels.iter().map(|c| c + 1).collect(),
            window: *spec,
            window_samples,
            stride_samples,
            sampling_rate,
            bands: layout.bands.clone(),
            filter_order: layout.filter_order,
            correlation_lags: layout.lags(sampling_rate),
            correlation_means: layout.correlation_means,
            blocks: matrix.blocks.clone(),
            n_features: matrix.n_features(),
            n_rows: matrix.n_rows(),
        })
    }
}

struct Columns {
    rows: usize,
    names: Vec<String>,
    data: Vec<Vec<f64>>,
    blocks: Vec<FeatureBlock>,
    block_start: usize,
}

impl Columns {
    fn new(rows: usize) -> Self {
        Self { rows, names: Vec::new(), data: Vec::new(), blocks: Vec::new(), block_start: 0 }
    }

    fn push(&mut self, name: String, column: Vec<f64>) {
        debug_assert_eq!(column.len(), self.rows);
        self.names.push(name);
        self.data.push(column);
    }

    fn close_block(&mut self, name: &str) {
        self.blocks.push(FeatureBlock { name: name.into(), columns: self.names.len() - self.block_start });
        self.block_start = self.names.len();
    }
}

fn channel_label(index: usize) -> String {
    format!("ch{:02}", index + 1)
}

fn check_channels(channels: &[usize], available: usize) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::InvalidParameter("no channels selected".into()));
    }
    let mut seen = HashSet::new();
    for &c in channels {
        if c >= available {
            return Err(Error::InvalidParameter(format!(
                "channel {} out of range for a trial with {available} channels",
                c + 1
            )));
        }
        if !seen.insert(c) {
            return Err(Error::InvalidParameter(format!("channel {} selected twice", c + 1)));
        }
    }
    Ok(())
}

fn cut<'a>(x: &'a [f64], starts: &[usize], w: usize) -> Vec<&'a [f64]> {
    starts.iter().map(|&t| &x[t..t + w]).collect()
}

/// Extracts one feature row per window of `trial`. `channels` are 0-based.
pub fn build_feature_sets(
    trial: &TrialSignal,
    channels: &[usize],
    spec: &WindowSpec,
    set: FeatureSet,
    layout: &FeatureLayout,
) -> Result<FeatureMatrix> {
    check_channels(channels, trial.n_channels())?;
    let fs = trial.sampling_rate();
    let bands = &layout.bands;
    if bands.is_empty() {
        return Err(Error::InvalidParameter("no frequency bands configured".into()));
    }
    let mut band_names = HashSet::new();
    for band in bands {
        band.validate(fs)?;
        if !band_names.insert(band.name) {
            return Err(Error::InvalidParameter(format!("band {} configured twice", band.name)));
        }
    }
    let (w, s) = spec.in_samples(fs)?;
    let raw: Vec<Vec<f64>> = channels.iter().map(|&c| trial.post_pretrial(c)).collect::<Result<_>>()?;
    let starts = window_starts(raw[0].len(), w, s)?;
    let filtered: Vec<Vec<Vec<f64>>> = raw
        .iter()
        .map(|x| bands.iter().map(|b| butterworth_bandpass(x, fs, b, layout.filter_order)).collect())
        .collect::<Result<_>>()?;

    let mut cols = Columns::new(starts.len());

    // Set 1
    for (ci, x) in raw.iter().enumerate() {
        let powers: Vec<Vec<f64>> = cut(x, &starts, w).iter().map(|seg| band_power_psd(seg, fs, bands)).collect::<Result<_>>()?;
        for (bi, band) in bands.iter().enumerate() {
            cols.push(
                format!("psd_{}_{}", channel_label(channels[ci]), band.name),
                powers.iter().map(|p| p[bi]).collect(),
            );
        }
    }
    cols.close_block("psd");
    for (ci, per_band) in filtered.iter().enumerate() {
        for (bi, band) in bands.iter().enumerate() {
            let de = cut(&per_band[bi], &starts, w).into_iter().map(differential_entropy).collect::<Result<_>>()?;
            cols.push(format!("de_{}_{}", channel_label(channels[ci]), band.name), de);
        }
    }
    cols.close_block("de");

    if set >= FeatureSet::Set2 {
        let stats: Vec<Vec<Vec<SegmentStats>>> = filtered
            .iter()
            .map(|per_band| {
                per_band
                    .iter()
                    .map(|y| cut(y, &starts, w).into_iter().map(segment_stats).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for (ci, per_band) in stats.iter().enumerate() {
            for (bi, band) in bands.iter().enumerate() {
                for (k, stat) in SEGMENT_STAT_NAMES.iter().enumerate() {
                    cols.push(
                        format!("seg_{stat}_{}_{}", channel_label(channels[ci]), band.name),
                        per_band[bi].iter().map(|st| st.to_array()[k]).collect(),
                    );
                }
            }
        }
        cols.close_block("seg");
        for (ci, per_band) in stats.iter().enumerate() {
            for (bi, band) in bands.iter().enumerate() {
                let series = &per_band[bi];
                let diffs: Vec<[f64; 7]> = (0..series.len())
                    .map(|i| if i == 0 { [0.0; 7] } else { segment_diff(&series[i - 1], &series[i]).to_array() })
                    .collect();
                for (k, stat) in SEGMENT_STAT_NAMES.iter().enumerate() {
                    cols.push(
                        format!("diff_{stat}_{}_{}", channel_label(channels[ci]), band.name),
                        diffs.iter().map(|d| d[k]).collect(),
                    );
                }
            }
        }
        cols.close_block("diff");
    }

    if set >= FeatureSet::Set3 {
        for (ci, x) in raw.iter().enumerate() {
            let values = channel_stats(x)?.to_array();
            for (k, stat) in CHANNEL_STAT_NAMES.iter().enumerate() {
                cols.push(format!("chan_{stat}_{}", channel_label(channels[ci])), vec![values[k]; starts.len()]);
            }
        }
        cols.close_block("chan");
    }

    if set >= FeatureSet::Set4 {
        let phases: Vec<Vec<Vec<Vec<f64>>>> = filtered
            .iter()
            .map(|per_band| {
                per_band
                    .iter()
                    .map(|y| cut(y, &starts, w).into_iter().map(instantaneous_phase).collect())
                    .collect()
            })
            .collect();
        let n = channels.len();
        for i in 0..n {
            for j in i + 1..n {
                for (bi, band) in bands.iter().enumerate() {
                    let values = phases[i][bi]
                        .iter()
                        .zip(&phases[j][bi])
                        .map(|(a, b)| plv_from_phases(a, b))
                        .collect::<Result<_>>()?;
                    cols.push(
                        format!("plv_{}_{}_{}", channel_label(channels[i]), channel_label(channels[j]), band.name),
                        values,
                    );
                }
            }
        }
        cols.close_block("plv");
        let lags = layout.lags(fs);
        for i in 0..n {
            for j in i + 1..n {
                let (wi, wj) = (cut(&raw[i], &starts, w), cut(&raw[j], &starts, w));
                for &lag in &lags {
                    let values = wi
                        .iter()
                        .zip(&wj)
                        .map(|(a, b)| lagged_correlation(a, b, lag, layout.correlation_means))
                        .collect::<Result<_>>()?;
                    cols.push(
                        format!("corr_{}_{}_lag{lag}", channel_label(channels[i]), channel_label(channels[j])),
                        values,
                    );
                }
            }
        }
        cols.close_block("corr");
    }

    let expected = set.column_count(channels.len(), bands.len(), layout.lags(fs).len());
    debug_assert_eq!(cols.names.len(), expected);
    let values = DMatrix::from_fn(cols.rows, cols.data.len(), |r, c| cols.data[c][r]);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature values"));
    }
    Ok(FeatureMatrix { values, feature_names: cols.names, set, blocks: cols.blocks })
}
