//! Train/test splitting, standardization, synthetic data and the feature CSV
//! format.
//!
//! Feature CSV: a header `label,<name>,...` followed by one row per sample,
//! labels written as `+1` / `-1`.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

/// Columns whose training standard deviation falls below this are dropped.
pub const ZERO_VARIANCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Row indices of the train and test parts, each sorted ascending.
pub fn split_indices(labels: &[Label], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_train = (spec.train_fraction * n as f64).round() as usize;

    let (mut train, mut test) = if spec.stratified {
        let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i].is_positive()).collect();
        let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i].is_positive()).collect();
        if pos.len() < 2 || neg.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "stratified split needs at least 2 samples per class, got {} positive and {} negative",
                pos.len(),
                neg.len()
            )));
        }
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let pos_train = ((spec.train_fraction * pos.len() as f64).round() as usize).clamp(1, pos.len() - 1);
        let neg_train = n_train.saturating_sub(pos_train).clamp(1, neg.len() - 1);
        let mut train: Vec<usize> = pos[..pos_train].to_vec();
        train.extend_from_slice(&neg[..neg_train]);
        let mut test: Vec<usize> = pos[pos_train..].to_vec();
        test.extend_from_slice(&neg[neg_train..]);
        (train, test)
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let n_train = n_train.clamp(1, n.saturating_sub(1).max(1));
        let test = all.split_off(n_train);
        (all, test)
    };
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Seeded train/test split; both parts must contain both classes.
pub fn split(dataset: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, test) = split_indices(dataset.labels(), spec)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidDataset("split produced an empty part".into()));
    }
    Ok((dataset.select_rows(&train)?, dataset.select_rows(&test)?))
}

/// Per-column `(x - mean) / std` fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub n_input: usize,
    /// Retained input columns, ascending.
    pub kept: Vec<usize>,
    /// Zero-variance input columns removed from every transformed matrix.
    pub dropped: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Fits on `features` with the unbiased standard deviation.
    pub fn fit(features: &DMatrix<f64>) -> Result<Self> {
        let (n, d) = features.shape();
        if n < 2 {
            return Err(Error::InvalidDataset("standardizer needs at least 2 rows".into()));
        }
        let mut s = Self {
            n_input: d,
            kept: Vec::new(),
            dropped: Vec::new(),
            means: Vec::new(),
            stds: Vec::new(),
        };
        for (j, col) in features.column_iter().enumerate() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let std = var.sqrt();
            if std < ZERO_VARIANCE_TOLERANCE {
                s.dropped.push(j);
            } else {
                s.kept.push(j);
                s.means.push(mean);
                s.stds.push(std);
            }
        }
        if s.kept.is_empty() {
            return Err(Error::InvalidDataset("all feature columns have zero variance".into()));
        }
        Ok(s)
    }

    pub fn transform(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if features.ncols() != self.n_input {
            return Err(Error::DimensionMismatch {
                expected: self.n_input,
                actual: features.ncols(),
            });
        }
        Ok(DMatrix::from_fn(features.nrows(), self.kept.len(), |i, k| {
            (features[(i, self.kept[k])] - self.means[k]) / self.stds[k]
        }))
    }

    pub fn transform_dataset(&self, dataset: &LabeledDataset) -> Result<LabeledDataset> {
        LabeledDataset::new(self.transform(dataset.features())?, dataset.labels().to_vec())
    }
}

/// Fits on `train` only and applies the same transform to both splits.
pub fn fit_apply_standardizer(
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<(LabeledDataset, LabeledDataset, Standardizer)> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            actual: test.dim(),
        });
    }
    let standardizer = Standardizer::fit(train.features())?;
    Ok((
        standardizer.transform_dataset(train)?,
        standardizer.transform_dataset(test)?,
        standardizer,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub positive_fraction: f64,
    pub class_separation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            n_features: 10,
            positive_fraction: 1.0 / 3.0,
            class_separation: 2.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn n_positive(&self) -> usize {
        (self.positive_fraction * self.n_samples as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 4 {
            return Err(Error::InvalidParameter("n_samples must be >= 4".into()));
        }
        if self.n_features < 1 {
            return Err(Error::InvalidParameter("n_features must be >= 1".into()));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "positive fraction must lie in (0, 1), got {}",
                self.positive_fraction
            )));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(Error::InvalidParameter("class separation must be >= 0".into()));
        }
        let pos = self.n_positive();
        if pos < 2 || self.n_samples - pos < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 samples per class, got {pos} positive of {}",
                self.n_samples
            )));
        }
        Ok(())
    }
}

/// Two identity-covariance Gaussian classes whose means sit at
/// `±(separation / 2)` along the unit diagonal direction.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_pos = spec.n_positive();
    let mut labels: Vec<Label> = (0..spec.n_samples)
        .map(|i| if i < n_pos { Label::Positive } else { Label::Negative })
        .collect();
    labels.shuffle(&mut rng);

    let d = spec.n_features;
    let offset = 0.5 * spec.class_separation / (d as f64).sqrt();
    let mut features = DMatrix::zeros(spec.n_samples, d);
    for (i, label) in labels.iter().enumerate() {
        let shift = offset * label.sign();
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features[(i, j)] = noise + shift;
        }
    }
    LabeledDataset::new(features, labels)
}

/// Writes the feature CSV (`label` first, then the named columns).
pub fn write_feature_csv<W: Write>(
    mut out: W,
    names: &[String],
    features: &DMatrix<f64>,
    labels: &[Label],
) -> Result<()> {
    if names.len() != features.ncols() {
        return Err(Error::DimensionMismatch {
            expected: features.ncols(),
            actual: names.len(),
        });
    }
    if labels.len() != features.nrows() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            actual: labels.len(),
        });
    }
    let io = |e: std::io::Error| Error::Parse {
        location: "output".into(),
        message: e.to_string(),
    };
    let mut line = String::from("label");
    for name in names {
        line.push(',');
        line.push_str(name);
    }
    writeln!(out, "{line}").map_err(io)?;
    for (i, label) in labels.iter().enumerate() {
        line.clear();
        line.push_str(&label.to_string());
        for j in 0..features.ncols() {
            line.push(',');
            line.push_str(&format!("{:?}", features[(i, j)]));
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    Ok(())
}

/// Reads a feature CSV into column names and a labeled dataset.
pub fn read_feature_csv<R: BufRead>(input: R) -> Result<(Vec<String>, LabeledDataset)> {
    let mut lines = input.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        location: format!("line {}", line + 1),
        message,
    };
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty file".into()))?;
    let header = header.map_err(|e| parse_err(0, e.to_string()))?;
    let mut columns = header.trim_end().split(',');
    if columns.next() != Some("label") {
        return Err(parse_err(0, "first column must be `label`".into()));
    }
    let names: Vec<String> = columns.map(str::to_owned).collect();
    let d = names.len();
    if d == 0 {
        return Err(parse_err(0, "no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| parse_err(idx, e.to_string()))?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let label_cell = cells.next().unwrap_or_default();
        let label = match label_cell.trim() {
            "+1" | "1" | "1.0" => Label::Positive,
            "-1" | "-1.0" => Label::Negative,
            other => return Err(parse_err(idx, format!("invalid label `{other}`"))),
        };
        let before = values.len();
        for cell in cells {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(idx, format!("invalid number `{cell}`")))?;
            values.push(v);
        }
        if values.len() - before != d {
            return Err(parse_err(
                idx,
                format!("expected {d} feature values, found {}", values.len() - before),
            ));
        }
        labels.push(label);
    }
    let features = DMatrix::from_row_slice(labels.len(), d, &values);
    Ok((names, LabeledDataset::new(features, labels)?))
}
