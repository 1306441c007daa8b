//! Confusion counts, threshold metrics and rank-based ROC-AUC.

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

/// Column order of [`MetricsReport::csv_row`].
pub const REPORT_CSV_HEADER: &str = "accuracy,precision,recall,f1,auc,tp,fp,tn,fn";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_labels(truth: &[Label], predicted: &[Label]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                actual: predicted.len(),
            });
        }
        let mut c = Self::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t.is_positive(), p.is_positive()) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// `TP / (TP + FP)`, or 0 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `TP / (TP + FN)`, or 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub counts: ConfusionCounts,
}

impl MetricsReport {
    pub fn from_counts(counts: ConfusionCounts, auc: f64) -> Self {
        Self {
            accuracy: counts.accuracy(),
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            auc,
            counts,
        }
    }

    /// CSV row in [`REPORT_CSV_HEADER`] order.
    pub fn csv_row(&self) -> String {
        let c = &self.counts;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.accuracy, self.precision, self.recall, self.f1, self.auc, c.tp, c.fp, c.tn, c.fn_
        )
    }
}

pub fn classification_report(
    truth: &[Label],
    predicted: &[Label],
    scores: &[f64],
) -> Result<MetricsReport> {
    if truth.is_empty() {
        return Err(Error::InvalidDataset("empty evaluation set".into()));
    }
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: scores.len(),
        });
    }
    let counts = ConfusionCounts::from_labels(truth, predicted)?;
    let auc = roc_auc(scores, truth)?;
    Ok(MetricsReport::from_counts(counts, auc))
}

/// Wilcoxon-Mann-Whitney estimate of ROC-AUC; tied pairs count one half.
///
/// Runs in `O(N log N)`: sort once, assign mid-ranks to tie groups and sum the
/// positive ranks.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum keeps mid-ranks integral.
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end; twice their mean is start + end + 1.
        let twice_mid = (start + end + 1) as u128;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i].is_positive()).count();
        twice_rank_sum += twice_mid * pos_in_group as u128;
        start = end;
    }
    let n_pos_u = n_pos as u128;
    let twice_u = twice_rank_sum - n_pos_u * (n_pos_u + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(signs: &[i32]) -> Vec<Label> {
        signs
            .iter()
            .map(|&s| if s > 0 { Label::Positive } else { Label::Negative })
            .collect()
    }

    #[test]
    fn formula_example() {
        let c = ConfusionCounts { tp: 3, fp: 1, tn: 4, fn_: 2 };
        assert!((c.accuracy() - 0.7).abs() < 1e-15);
        assert!((c.precision() - 0.75).abs() < 1e-15);
        assert!((c.recall() - 0.6).abs() < 1e-15);
        assert!((c.f1() - 2.0 * 0.45 / 1.35).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let y = labels(&[1, -1, 1, -1]);
        let r = classification_report(&y, &y, &[0.9, 0.1, 0.8, 0.2]).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1, r.auc), (1.0, 1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_negative_predictor_on_two_to_one_data() {
        let y = labels(&[1, -1, -1, 1, -1, -1]);
        let pred = vec![Label::Negative; 6];
        let r = classification_report(&y, &pred, &[0.0; 6]).unwrap();
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.precision, 0.0);
        assert_eq!(r.f1, 0.0);
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.auc, 0.5);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.9, 0.4, 0.5], &labels(&[1, 1, -1])).unwrap(), 0.5);
        assert_eq!(roc_auc(&[3.0, 2.0, 1.0, 0.0], &labels(&[1, 1, -1, -1])).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5, 0.5], &labels(&[1, -1])).unwrap(), 0.5);
    }

    #[test]
    fn auc_errors() {
        assert_eq!(roc_auc(&[0.1, 0.2], &labels(&[1, 1])), Err(Error::SingleClass));
        assert!(roc_auc(&[0.1], &labels(&[1, -1])).is_err());
        assert!(roc_auc(&[f64::NAN, 0.2], &labels(&[1, -1])).is_err());
        assert!(classification_report(&[], &[], &[]).is_err());
    }

    #[test]
    fn csv_row_order() {
        let c = ConfusionCounts { tp: 3, fp: 1, tn: 4, fn_: 2 };
        let r = MetricsReport::from_counts(c, 0.5);
        assert!(r.csv_row().ends_with(",0.5,3,1,4,2"));
    }
}
