//! Linear baselines: L2-regularized logistic regression and a soft-margin
//! linear SVM, both fitted by deterministic full-batch first-order methods.
//!
//! Coefficients are stored intercept first, `β = [β₀, β₁, …, β_d]`; only
//! `β₁…β_d` are regularized.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

pub const DEFAULT_LOGISTIC_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
/// Candidate `C` values for validation tuning.
pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Svm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub iterations: usize,
    pub converged: bool,
    /// Final gradient norm (logistic) or final objective (SVM).
    pub final_criterion: f64,
    /// SVM: primal objective of the returned iterate at each checkpoint.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub beta: Vec<f64>,
    /// Probability cut-off for logistic, margin cut-off for SVM.
    pub threshold: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub train_meta: TrainMeta,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.beta.len() - 1
    }

    /// `β₀ + β₁:dᵀx` for every row.
    pub fn decision_scores(&self, features: &DMatrix<f64>) -> Result<Vec<f64>> {
        if features.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: features.ncols(),
            });
        }
        let w = DVector::from_column_slice(&self.beta[1..]);
        Ok((features * w).iter().map(|s| s + self.beta[0]).collect())
    }

    /// The cut-off on [`decision_scores`](Self::decision_scores) equivalent
    /// to `threshold`.
    pub fn score_threshold(&self) -> f64 {
        match self.kind {
            ModelKind::Logistic => (self.threshold / (1.0 - self.threshold)).ln(),
            ModelKind::Svm => self.threshold,
        }
    }

    pub fn predict_from_scores(&self, scores: &[f64]) -> Vec<Label> {
        let cut = self.score_threshold();
        scores
            .iter()
            .map(|&s| if s > cut { Label::Positive } else { Label::Negative })
            .collect()
    }

    pub fn predict(&self, features: &DMatrix<f64>) -> Result<Vec<Label>> {
        Ok(self.predict_from_scores(&self.decision_scores(features)?))
    }

    /// `P(y = +1 | x)` for logistic models.
    pub fn probabilities(&self, features: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.decision_scores(features)?.into_iter().map(sigmoid).collect())
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be > 0, got {c}")));
    }
    Ok(())
}

fn margins(data: &LabeledDataset, beta: &[f64]) -> Vec<f64> {
    let w = DVector::from_column_slice(&beta[1..]);
    let scores = data.features() * w;
    scores
        .iter()
        .zip(data.labels())
        .map(|(s, l)| l.sign() * (s + beta[0]))
        .collect()
}

fn penalty(beta: &[f64]) -> f64 {
    beta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Mean logistic loss plus `‖β₁:d‖² / (2CN)`.
pub fn logistic_loss(data: &LabeledDataset, beta: &[f64], c: f64) -> f64 {
    let n = data.len() as f64;
    let loss: f64 = margins(data, beta).iter().map(|&m| softplus(-m)).sum::<f64>() / n;
    loss + penalty(beta) / (2.0 * c * n)
}

pub fn logistic_gradient(data: &LabeledDataset, beta: &[f64], c: f64) -> Vec<f64> {
    let n = data.len() as f64;
    let m = margins(data, beta);
    let coef = DVector::from_iterator(
        m.len(),
        m.iter().zip(data.labels()).map(|(&mi, l)| -l.sign() * sigmoid(-mi) / n),
    );
    let gw = data.features().tr_mul(&coef);
    let mut g = Vec::with_capacity(beta.len());
    g.push(coef.sum());
    for (j, gj) in gw.iter().enumerate() {
        g.push(gj + beta[j + 1] / (c * n));
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Full-batch gradient descent with Armijo backtracking on the regularized
/// logistic loss.
pub fn fit_logistic(train: &LabeledDataset, c: f64, tol: f64, max_iter: usize) -> Result<LinearModel> {
    check_c(c)?;
    let mut beta = vec![0.0; train.dim() + 1];
    let mut loss = logistic_loss(train, &beta, c);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut grad = logistic_gradient(train, &beta, c);
    let mut grad_norm = norm(&grad);
    while grad_norm > tol && iterations < max_iter {
        step *= 2.0;
        let g_sq = grad_norm * grad_norm;
        loop {
            let trial: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b - step * g).collect();
            let trial_loss = logistic_loss(train, &trial, c);
            if trial_loss <= loss - 0.5 * step * g_sq {
                beta = trial;
                loss = trial_loss;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Err(Error::NonFinite("logistic line search"));
            }
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("logistic loss"));
        }
        grad = logistic_gradient(train, &beta, c);
        grad_norm = norm(&grad);
        iterations += 1;
    }
    Ok(LinearModel {
        kind: ModelKind::Logistic,
        beta,
        threshold: 0.5,
        c,
        train_meta: TrainMeta {
            iterations,
            converged: grad_norm <= tol,
            final_criterion: grad_norm,
            objective_trace: Vec::new(),
        },
    })
}

/// `½‖β₁:d‖² + C Σ max(0, 1 - yᵢ βᵀxᵢ)`.
pub fn svm_objective(data: &LabeledDataset, beta: &[f64], c: f64) -> f64 {
    let hinge: f64 = margins(data, beta).iter().map(|&m| (1.0 - m).max(0.0)).sum();
    0.5 * penalty(beta) + c * hinge
}

const SVM_CHECK_EVERY: usize = 10;
const SVM_PATIENCE_CHECKS: usize = 50;

/// Subgradient descent on the hinge objective scaled by `1 / (CN)`, with
/// step `η₀ / √(t+1)` (at most `CN / (t+1)` for the weights) and a linearly
/// weighted running average of iterates.
///
/// Every 10 iterations the averaged iterate replaces the returned model when
/// it lowers the objective, so `train_meta.objective_trace` is non-increasing.
/// Stops when the last 50 checkpoints improved the objective by a relative
/// amount of at most `tol`, or after `max_iter` iterations.
pub fn fit_linear_svm(train: &LabeledDataset, c: f64, tol: f64, max_iter: usize) -> Result<LinearModel> {
    check_c(c)?;
    let n = train.len() as f64;
    let d = train.dim();
    let features = train.features();
    let signs = train.label_signs();
    let radius = features
        .row_iter()
        .map(|r| (r.norm_squared() + 1.0).sqrt())
        .fold(0.0, f64::max);
    let eta0 = 1.0 / radius;
    let mu = 1.0 / (c * n);

    let mut beta = vec![0.0; d + 1];
    let mut avg = beta.clone();
    let mut weight_sum = 0.0;
    let mut best = beta.clone();
    let mut best_obj = svm_objective(train, &best, c);
    let mut objective_trace = vec![best_obj];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let m = margins(train, &beta);
        let coef = DVector::from_iterator(
            m.len(),
            m.iter()
                .zip(signs.iter())
                .map(|(&mi, &y)| if mi < 1.0 { -y / n } else { 0.0 }),
        );
        let gw = features.tr_mul(&coef);
        let t = (iterations + 1) as f64;
        let eta = eta0 / t.sqrt();
        // The ridge term is mu-strongly convex; capping the weight step at
        // 1/(mu t) keeps small-C fits stable.
        let eta_w = eta.min(1.0 / (mu * t));
        beta[0] -= eta * coef.sum();
        for j in 0..d {
            beta[j + 1] -= eta_w * (gw[j] + mu * beta[j + 1]);
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("svm iterate"));
        }
        iterations += 1;

        let weight = iterations as f64;
        weight_sum += weight;
        let mix = weight / weight_sum;
        for (a, b) in avg.iter_mut().zip(&beta) {
            *a += mix * (b - *a);
        }

        if iterations % SVM_CHECK_EVERY == 0 {
            let obj = svm_objective(train, &avg, c);
            if obj < best_obj {
                best_obj = obj;
                best.clone_from(&avg);
            }
            objective_trace.push(best_obj);
            let k = objective_trace.len();
            if k > SVM_PATIENCE_CHECKS {
                let old = objective_trace[k - 1 - SVM_PATIENCE_CHECKS];
                if old - best_obj <= tol * old.abs().max(f64::MIN_POSITIVE) {
                    converged = true;
                    break;
                }
            }
        }
    }
    Ok(LinearModel {
        kind: ModelKind::Svm,
        beta: best,
        threshold: 0.0,
        c,
        train_meta: TrainMeta {
            iterations,
            converged,
            final_criterion: best_obj,
            objective_trace,
        },
    })
}
