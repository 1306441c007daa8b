//! Labeled feature matrices with binary ±1 labels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label, serialized as `+1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_sign(value: f64) -> Result<Self> {
        if value == 1.0 {
            Ok(Label::Positive)
        } else if value == -1.0 {
            Ok(Label::Negative)
        } else {
            Err(Error::InvalidDataset(format!("label must be +1 or -1, got {value}")))
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Positive => f.write_str("+1"),
            Label::Negative => f.write_str("-1"),
        }
    }
}

/// An `N x d` feature matrix paired with one label per row.
///
/// Construction enforces `N >= 2`, `d >= 1`, finite entries and the presence
/// of both classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: DMatrix<f64>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if features.nrows() < 2 {
            return Err(Error::InvalidDataset("need at least 2 samples".into()));
        }
        if features.ncols() < 1 {
            return Err(Error::InvalidDataset("need at least 1 feature".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let positives = labels.iter().filter(|l| l.is_positive()).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::SingleClass);
        }
        Ok(Self { features, labels })
    }

    /// Builds a dataset from row slices and `±1` labels.
    pub fn from_rows(rows: &[Vec<f64>], labels: &[f64]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: bad.len(),
            });
        }
        let features = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        let labels = labels
            .iter()
            .map(|&l| Label::from_sign(l))
            .collect::<Result<Vec<_>>>()?;
        Self::new(features, labels)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    pub fn n_negative(&self) -> usize {
        self.len() - self.n_positive()
    }

    /// Labels as `±1.0` values.
    pub fn label_signs(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.labels.iter().map(|l| l.sign()))
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let features = self.features.select_rows(indices.iter());
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels)
    }
}

/// Fraction of `+1` labels; errors for single-class label sets.
pub fn positive_fraction(labels: &[Label]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::InvalidDataset("empty label set".into()));
    }
    let positives = labels.iter().filter(|l| l.is_positive()).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(positives as f64 / labels.len() as f64)
}
