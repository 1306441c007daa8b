//! Training and evaluation steps shared by the `train`, `eval` and `compare`
//! commands. Nothing here touches the filesystem.

use aucmax::baselines::{fit_linear_svm, fit_logistic, LinearModel, ModelKind};
use aucmax::data::{fit_apply_standardizer, split, split_indices, SplitSpec, Standardizer};
use aucmax::solvers::{solve, SolveResult, SolverConfig, TraceMonitor};
use aucmax::{classification_report, roc_auc, AucObjective, Label, LabeledDataset, MetricsReport, PrimalDualState};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fraction of the training split held out when tuning `C`.
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Standardized train/test splits plus what is needed to replay the transform.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub input_features: Vec<String>,
    pub kept_features: Vec<String>,
    pub standardizer: Standardizer,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn prepare(names: &[String], data: &LabeledDataset, spec: &SplitSpec) -> aucmax::Result<Prepared> {
    let (train, test) = split(data, spec)?;
    let (train, test, standardizer) = fit_apply_standardizer(&train, &test)?;
    let kept_features = standardizer.kept.iter().map(|&j| names[j].clone()).collect();
    Ok(Prepared {
        input_features: names.to_vec(),
        kept_features,
        standardizer,
        train,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AucKind {
    Auc,
}

/// Linear scorer `wᵀa` from the minimax solution; predicts +1 iff the score
/// exceeds `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucModel {
    pub kind: AucKind,
    pub w: Vec<f64>,
    pub u: f64,
    pub v: f64,
    pub y: f64,
    pub threshold: f64,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_grad_norm: f64,
}

impl AucModel {
    pub fn from_state(state: &PrimalDualState, result: &SolveResult, lambda: f64, threshold: Option<f64>) -> Self {
        Self {
            kind: AucKind::Auc,
            w: state.w.clone(),
            u: state.u,
            v: state.v,
            y: state.y,
            threshold: threshold.unwrap_or(0.5 * (state.u + state.v)),
            lambda,
            converged: result.converged,
            iterations: result.iterations_used,
            final_grad_norm: result.final_grad_norm,
        }
    }
}

/// Either kind of trained linear classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Classifier {
    Auc(AucModel),
    Linear(LinearModel),
}

impl Classifier {
    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Auc(_) => "auc-max",
            Classifier::Linear(m) => match m.kind {
                ModelKind::Logistic => "logistic",
                ModelKind::Svm => "linear-svm",
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Classifier::Auc(m) => m.w.len(),
            Classifier::Linear(m) => m.dim(),
        }
    }

    pub fn scores(&self, features: &DMatrix<f64>) -> aucmax::Result<Vec<f64>> {
        match self {
            Classifier::Auc(m) => {
                if features.ncols() != m.w.len() {
                    return Err(aucmax::Error::DimensionMismatch {
                        expected: m.w.len(),
                        actual: features.ncols(),
                    });
                }
                Ok((features * DVector::from_column_slice(&m.w)).iter().copied().collect())
            }
            Classifier::Linear(m) => m.decision_scores(features),
        }
    }

    pub fn predict_from_scores(&self, scores: &[f64]) -> Vec<Label> {
        match self {
            Classifier::Auc(m) => scores
                .iter()
                .map(|&s| if s > m.threshold { Label::Positive } else { Label::Negative })
                .collect(),
            Classifier::Linear(m) => m.predict_from_scores(scores),
        }
    }

    /// Scores and the classification report on `data`.
    pub fn evaluate(&self, data: &LabeledDataset) -> aucmax::Result<(Vec<f64>, MetricsReport)> {
        let scores = self.scores(data.features())?;
        let predicted = self.predict_from_scores(&scores);
        let report = classification_report(data.labels(), &predicted, &scores)?;
        Ok((scores, report))
    }
}

struct AucMonitor<'a> {
    train: &'a LabeledDataset,
    test: &'a LabeledDataset,
}

impl AucMonitor<'_> {
    fn auc(data: &LabeledDataset, w: &DVector<f64>) -> Option<f64> {
        let scores: Vec<f64> = (data.features() * w).iter().copied().collect();
        roc_auc(&scores, data.labels()).ok()
    }
}

impl TraceMonitor for AucMonitor<'_> {
    fn evaluate(&self, z: &DVector<f64>) -> (Option<f64>, Option<f64>) {
        let w = z.rows(0, self.train.dim()).into_owned();
        (Self::auc(self.train, &w), Self::auc(self.test, &w))
    }
}

/// Solves the AUC saddle problem on the training split, starting from zero.
pub fn train_auc_max(
    prepared: &Prepared,
    solver: &SolverConfig,
    lambda: f64,
    threshold: Option<f64>,
    trace_auc: bool,
) -> aucmax::Result<(AucModel, SolveResult)> {
    let objective = AucObjective::with_lambda(&prepared.train, lambda)?;
    let start = PrimalDualState::zeros(prepared.train.dim()).to_stacked();
    let monitor = AucMonitor {
        train: &prepared.train,
        test: &prepared.test,
    };
    let monitor: Option<&dyn TraceMonitor> = if trace_auc { Some(&monitor) } else { None };
    let result = solve(&objective, &start, solver, monitor)?;
    let model = AucModel::from_state(&result.state()?, &result, lambda, threshold);
    Ok((model, result))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self {
            tolerance: aucmax::baselines::DEFAULT_LOGISTIC_TOLERANCE,
            max_iterations: aucmax::baselines::DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(rename = "C")]
    pub c: f64,
    pub validation_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedBaseline {
    pub model: LinearModel,
    /// Empty when `C` was fixed by the caller.
    pub grid: Vec<GridPoint>,
}

fn fit_kind(kind: ModelKind, data: &LabeledDataset, c: f64, opts: &BaselineOptions) -> aucmax::Result<LinearModel> {
    match kind {
        ModelKind::Logistic => fit_logistic(data, c, opts.tolerance, opts.max_iterations),
        ModelKind::Svm => fit_linear_svm(data, c, opts.tolerance, opts.max_iterations),
    }
}

/// Fits a baseline on `train`. Without a fixed `C`, every grid value is fitted
/// on a stratified 90% of `train` and scored by AUC on the remaining 10%; the
/// best value (earliest on ties) is refitted on all of `train`.
pub fn fit_baseline(
    kind: ModelKind,
    train: &LabeledDataset,
    fixed_c: Option<f64>,
    c_grid: &[f64],
    seed: u64,
    opts: &BaselineOptions,
) -> aucmax::Result<TunedBaseline> {
    if let Some(c) = fixed_c {
        return Ok(TunedBaseline {
            model: fit_kind(kind, train, c, opts)?,
            grid: Vec::new(),
        });
    }
    if c_grid.is_empty() {
        return Err(aucmax::Error::InvalidParameter("empty C grid".into()));
    }
    let carve = SplitSpec {
        train_fraction: 1.0 - VALIDATION_FRACTION,
        seed,
        stratified: true,
    };
    let (fit_rows, val_rows) = split_indices(train.labels(), &carve)?;
    let fit_set = train.select_rows(&fit_rows)?;
    let val_set = train.select_rows(&val_rows)?;
    let grid = c_grid
        .par_iter()
        .map(|&c| {
            let model = fit_kind(kind, &fit_set, c, opts)?;
            let scores = model.decision_scores(val_set.features())?;
            Ok(GridPoint {
                c,
                validation_auc: roc_auc(&scores, val_set.labels())?,
            })
        })
        .collect::<aucmax::Result<Vec<_>>>()?;
    let best = grid
        .iter()
        .fold(grid[0], |best, p| if p.validation_auc > best.validation_auc { *p } else { best });
    Ok(TunedBaseline {
        model: fit_kind(kind, train, best.c, opts)?,
        grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub split: SplitName,
    #[serde(flatten)]
    pub report: MetricsReport,
}

pub const COMPARISON_CSV_HEADER: &str = "model,split,accuracy,precision,recall,f1,auc,tp,fp,tn,fn";

impl ComparisonRow {
    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.model, self.split.as_str(), self.report.csv_row())
    }
}

/// Per-sample scores of one model on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSplit {
    pub model: String,
    pub split: SplitName,
    pub labels: Vec<Label>,
    pub scores: Vec<f64>,
    pub predicted: Vec<Label>,
}

#[derive(Debug, Clone)]
pub struct CompareSettings {
    pub solver: SolverConfig,
    pub lambda: f64,
    pub threshold: Option<f64>,
    pub c_grid: Vec<f64>,
    pub baseline: BaselineOptions,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub logistic: TunedBaseline,
    pub svm: TunedBaseline,
    pub auc_max: AucModel,
    pub auc_solve: SolveResult,
    pub rows: Vec<ComparisonRow>,
    pub scored: Vec<ScoredSplit>,
}

impl Comparison {
    pub fn row(&self, model: &str, split: SplitName) -> Option<&MetricsReport> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.split == split)
            .map(|r| &r.report)
    }
}

/// Fits tuned logistic regression, tuned linear SVM and the AUC maximizer on
/// the same split and reports each on train and test.
pub fn compare(prepared: &Prepared, settings: &CompareSettings) -> aucmax::Result<Comparison> {
    let carve_seed = settings.seed.wrapping_add(1);
    let fit = |kind| {
        fit_baseline(kind, &prepared.train, None, &settings.c_grid, carve_seed, &settings.baseline)
    };
    let ((logistic, svm), auc) = rayon::join(
        || rayon::join(|| fit(ModelKind::Logistic), || fit(ModelKind::Svm)),
        || train_auc_max(prepared, &settings.solver, settings.lambda, settings.threshold, false),
    );
    let (logistic, svm) = (logistic?, svm?);
    let (auc_max, auc_solve) = auc?;

    let models = [
        Classifier::Linear(logistic.model.clone()),
        Classifier::Linear(svm.model.clone()),
        Classifier::Auc(auc_max.clone()),
    ];
    let mut rows = Vec::with_capacity(6);
    let mut scored = Vec::with_capacity(6);
    for model in &models {
        for (split, data) in [(SplitName::Train, &prepared.train), (SplitName::Test, &prepared.test)] {
            let (scores, report) = model.evaluate(data)?;
            rows.push(ComparisonRow {
                model: model.name().into(),
                split,
                report,
            });
            scored.push(ScoredSplit {
                model: model.name().into(),
                split,
                labels: data.labels().to_vec(),
                predicted: model.predict_from_scores(&scores),
                scores,
            });
        }
    }
    Ok(Comparison {
        logistic,
        svm,
        auc_max,
        auc_solve,
        rows,
        scored,
    })
}
