//! Subcommand bodies. Each command computes everything in memory and only
//! then writes its files, so a failure never leaves partial outputs behind.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use aucmax::data::{generate_synthetic, read_feature_csv, write_feature_csv, Standardizer};
use aucmax::signal::io::read_signal_file;
use aucmax::signal::{build_feature_sets, default_channels, FeatureManifest, DEFAULT_CHANNELS_ONE_BASED};
use aucmax::solvers::write_trace_csv;
use aucmax::{Label, LabeledDataset, MetricsReport, Method};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CompareConfig, ExtractConfig, SynthConfig, TrainConfig};
use crate::pipeline::{
    compare, fit_baseline, prepare, train_auc_max, Classifier, CompareSettings, GridPoint, ScoredSplit, SplitName,
    COMPARISON_CSV_HEADER,
};

/// Above this stacked dimension the quasi-Newton solvers get slow.
pub const QN_DIMENSION_WARNING: usize = 1500;

/// Files to be written once every computation has succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    fn add_json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> anyhow::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(path, bytes);
        Ok(())
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn write(self) -> anyhow::Result<()> {
        for (path, bytes) in self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            }
            std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }
}

/// `data.csv` -> `data.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn read_features(path: &Path) -> anyhow::Result<(Vec<String>, LabeledDataset)> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_feature_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn feature_csv(names: &[String], features: &DMatrix<f64>, labels: &[Label]) -> anyhow::Result<Vec<u8>> {
    let mut bytes = Vec::new();
    write_feature_csv(&mut bytes, names, features, labels)?;
    Ok(bytes)
}

#[derive(Serialize)]
struct SynthManifest<'a> {
    command: &'static str,
    config: &'a SynthConfig,
    n_rows: usize,
    n_features: usize,
    n_positive: usize,
}

pub fn synth(cfg: &SynthConfig) -> anyhow::Result<Outputs> {
    let data = generate_synthetic(&cfg.spec)?;
    let names: Vec<String> = (1..=data.dim()).map(|j| format!("x{j:02}")).collect();
    let mut out = Outputs::default();
    out.add(cfg.out.clone(), feature_csv(&names, data.features(), data.labels())?);
    out.add_json(
        manifest_path(&cfg.out),
        &SynthManifest {
            command: "synth",
            config: cfg,
            n_rows: data.len(),
            n_features: data.dim(),
            n_positive: data.n_positive(),
        },
    )?;
    Ok(out)
}

/// Parses `trial,label` lines; a first line whose label is not a sign is
/// taken as a header.
pub fn parse_labels(text: &str, source: &Path) -> anyhow::Result<HashMap<String, Label>> {
    let mut labels = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, raw) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("{}: line {}: expected 'trial,label'", source.display(), i + 1))?;
        let label = match raw.trim().parse::<f64>().ok().and_then(|v| Label::from_sign(v).ok()) {
            Some(l) => l,
            None if i == 0 => continue,
            None => bail!("{}: line {}: label must be +1 or -1, got '{}'", source.display(), i + 1, raw.trim()),
        };
        if labels.insert(id.trim().to_string(), label).is_some() {
            bail!("{}: line {}: trial '{}' listed twice", source.display(), i + 1, id.trim());
        }
    }
    Ok(labels)
}

fn trial_id(path: &Path) -> anyhow::Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| anyhow!("cannot derive a trial id from {}", path.display()))
}

#[derive(Serialize)]
struct TrialEntry {
    id: String,
    path: PathBuf,
    /// `+1` or `-1`.
    label: f64,
    rows: usize,
}

#[derive(Serialize)]
struct ExtractManifest<'a> {
    command: &'static str,
    config: &'a ExtractConfig,
    layout: FeatureManifest,
    trials: Vec<TrialEntry>,
}

pub fn extract(cfg: &ExtractConfig) -> anyhow::Result<Outputs> {
    let label_text =
        std::fs::read_to_string(&cfg.labels).with_context(|| format!("cannot read {}", cfg.labels.display()))?;
    let labels = parse_labels(&label_text, &cfg.labels)?;

    let extracted = cfg
        .signals
        .par_iter()
        .map(|path| -> anyhow::Result<_> {
            let id = trial_id(path)?;
            let label = *labels
                .get(&id)
                .ok_or_else(|| anyhow!("no label for trial '{id}' in {}", cfg.labels.display()))?;
            let trial = read_signal_file(path)?;
            let channels = match &cfg.channels_one_based {
                Some(list) => list.iter().map(|c| c - 1).collect(),
                None if DEFAULT_CHANNELS_ONE_BASED.iter().all(|&c| c <= trial.n_channels()) => default_channels(),
                None => (0..trial.n_channels()).collect(),
            };
            let matrix = build_feature_sets(&trial, &channels, &cfg.window, cfg.set, &cfg.layout)
                .with_context(|| format!("extracting {}", path.display()))?;
            let manifest =
                FeatureManifest::new(&matrix, &channels, &cfg.window, trial.sampling_rate(), &cfg.layout)?;
            Ok((id, path.clone(), label, matrix, manifest))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let (_, first_path, _, first, first_manifest) = &extracted[0];
    let names = first.feature_names().to_vec();
    let mut trials = Vec::with_capacity(extracted.len());
    let mut row_labels = Vec::new();
    let total: usize = extracted.iter().map(|e| e.3.n_rows()).sum();
    let mut values = DMatrix::zeros(total, names.len());
    let mut row = 0;
    for (id, path, label, matrix, manifest) in &extracted {
        if matrix.feature_names() != names.as_slice() || manifest.sampling_rate != first_manifest.sampling_rate {
            bail!(
                "{} does not share the channel layout or sampling rate of {}",
                path.display(),
                first_path.display()
            );
        }
        values.rows_mut(row, matrix.n_rows()).copy_from(matrix.values());
        row += matrix.n_rows();
        row_labels.extend(std::iter::repeat_n(*label, matrix.n_rows()));
        trials.push(TrialEntry {
            id: id.clone(),
            path: path.clone(),
            label: label.sign(),
            rows: matrix.n_rows(),
        });
    }
    let mut layout = first_manifest.clone();
    layout.n_rows = total;

    let mut out = Outputs::default();
    out.add(cfg.out.clone(), feature_csv(&names, &values, &row_labels)?);
    out.add_json(
        manifest_path(&cfg.out),
        &ExtractManifest {
            command: "extract",
            config: cfg,
            layout,
            trials,
        },
    )?;
    Ok(out)
}

/// Everything needed to score new data with a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    /// Columns expected in the input CSV.
    pub input_features: Vec<String>,
    /// Columns left after dropping zero-variance ones; `model` is defined on these.
    pub features: Vec<String>,
    pub standardizer: Standardizer,
    pub model: Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: String,
    pub train: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Serialize)]
struct SolverSummary {
    converged: bool,
    iterations: usize,
    final_grad_norm: f64,
    step_size: Option<f64>,
    skipped_updates: usize,
}

#[derive(Serialize)]
struct RunSummary {
    n_samples: usize,
    n_positive: usize,
    train_rows: usize,
    test_rows: usize,
    input_features: usize,
    features_used: usize,
    dropped_features: Vec<String>,
}

#[derive(Serialize)]
struct TrainManifest<'a> {
    command: &'static str,
    config: &'a TrainConfig,
    data: RunSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<SolverSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_tuning: Option<Vec<GridPoint>>,
    outputs: Vec<PathBuf>,
}

fn scores_csv(scored: &[ScoredSplit]) -> String {
    let mut csv = String::from("model,split,index,label,score,predicted\n");
    for s in scored {
        for (i, ((label, score), predicted)) in s.labels.iter().zip(&s.scores).zip(&s.predicted).enumerate() {
            writeln!(csv, "{},{},{i},{label},{score:?},{predicted}", s.model, s.split.as_str()).unwrap();
        }
    }
    csv
}

fn warn_if_large(method: Method, dim: usize) {
    if method == Method::QnBroyden && dim + 3 > QN_DIMENSION_WARNING {
        eprintln!(
            "warning: quasi-Newton on {} stacked variables forms dense {0}x{0} matrices; expect long run times",
            dim + 3
        );
    }
}

fn run_summary(data: &LabeledDataset, prepared: &crate::pipeline::Prepared) -> RunSummary {
    RunSummary {
        n_samples: data.len(),
        n_positive: data.n_positive(),
        train_rows: prepared.train.len(),
        test_rows: prepared.test.len(),
        input_features: prepared.input_features.len(),
        features_used: prepared.kept_features.len(),
        dropped_features: prepared
            .standardizer
            .dropped
            .iter()
            .map(|&j| prepared.input_features[j].clone())
            .collect(),
    }
}

pub fn train(cfg: &TrainConfig) -> anyhow::Result<Outputs> {
    let (names, data) = read_features(&cfg.data)?;
    let prepared = prepare(&names, &data, &cfg.split)?;
    let dir = &cfg.out_dir;
    let mut out = Outputs::default();

    let (classifier, solver, c_tuning) = match cfg.baseline_kind() {
        Some(kind) => {
            let tuned = fit_baseline(
                kind,
                &prepared.train,
                cfg.c,
                &cfg.c_grid,
                cfg.seed.wrapping_add(1),
                &cfg.baseline,
            )?;
            let grid = (!tuned.grid.is_empty()).then_some(tuned.grid);
            (Classifier::Linear(tuned.model), None, grid)
        }
        None => {
            warn_if_large(cfg.auc.solver.method, prepared.train.dim());
            let (model, result) =
                train_auc_max(&prepared, &cfg.auc.solver, cfg.auc.lambda, cfg.auc.threshold, cfg.trace_auc)?;
            if !result.converged {
                eprintln!(
                    "warning: stopped after {} iterations with gradient norm {:e}",
                    result.iterations_used, result.final_grad_norm
                );
            }
            let mut trace = Vec::new();
            write_trace_csv(&result.trace, &mut trace)?;
            out.add(dir.join("trace.csv"), trace);
            let summary = SolverSummary {
                converged: result.converged,
                iterations: result.iterations_used,
                final_grad_norm: result.final_grad_norm,
                step_size: result.step_size,
                skipped_updates: result.skipped_updates,
            };
            (Classifier::Auc(model), Some(summary), None)
        }
    };

    let mut scored = Vec::with_capacity(2);
    let mut reports = Vec::with_capacity(2);
    for (split, set) in [(SplitName::Train, &prepared.train), (SplitName::Test, &prepared.test)] {
        let (scores, report) = classifier.evaluate(set)?;
        reports.push(report);
        scored.push(ScoredSplit {
            model: classifier.name().into(),
            split,
            labels: set.labels().to_vec(),
            predicted: classifier.predict_from_scores(&scores),
            scores,
        });
    }
    let report = TrainReport {
        model: classifier.name().into(),
        train: reports[0],
        test: reports[1],
    };
    let model_file = ModelFile {
        input_features: prepared.input_features.clone(),
        features: prepared.kept_features.clone(),
        standardizer: prepared.standardizer.clone(),
        model: classifier,
    };
    out.add_json(dir.join("model.json"), &model_file)?;
    out.add_json(dir.join("report.json"), &report)?;
    out.add(dir.join("scores.csv"), scores_csv(&scored).into_bytes());
    let mut outputs: Vec<PathBuf> = out.paths().map(Path::to_path_buf).collect();
    outputs.push(dir.join("manifest.json"));
    out.add_json(
        dir.join("manifest.json"),
        &TrainManifest {
            command: "train",
            config: cfg,
            data: run_summary(&data, &prepared),
            solver,
            c_tuning,
            outputs,
        },
    )?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub data: PathBuf,
    pub n_rows: usize,
    pub report: MetricsReport,
}

pub fn eval(model_path: &Path, data_path: &Path) -> anyhow::Result<EvalReport> {
    let text =
        std::fs::read_to_string(model_path).with_context(|| format!("cannot read {}", model_path.display()))?;
    let model: ModelFile =
        serde_json::from_str(&text).with_context(|| format!("invalid model file {}", model_path.display()))?;
    let (names, data) = read_features(data_path)?;
    if names != model.input_features {
        bail!(
            "{} has columns that differ from the {} the model was trained on",
            data_path.display(),
            model.input_features.len()
        );
    }
    let data = model.standardizer.transform_dataset(&data)?;
    if data.dim() != model.model.dim() {
        bail!("model expects {} features after standardization, got {}", model.model.dim(), data.dim());
    }
    let (_, report) = model.model.evaluate(&data)?;
    Ok(EvalReport {
        model: model.model.name().into(),
        data: data_path.to_path_buf(),
        n_rows: data.len(),
        report,
    })
}

#[derive(Serialize)]
struct Tuning {
    #[serde(rename = "C")]
    c: f64,
    grid: Vec<GridPoint>,
}

#[derive(Serialize)]
struct CompareManifest<'a> {
    command: &'static str,
    config: &'a CompareConfig,
    data: RunSummary,
    logistic: Tuning,
    svm: Tuning,
    auc_solver: SolverSummary,
    outputs: Vec<PathBuf>,
}

pub fn compare_cmd(cfg: &CompareConfig) -> anyhow::Result<Outputs> {
    let (names, data) = read_features(&cfg.data)?;
    let prepared = prepare(&names, &data, &cfg.split)?;
    warn_if_large(cfg.auc.solver.method, prepared.train.dim());
    let settings = CompareSettings {
        solver: cfg.auc.solver.clone(),
        lambda: cfg.auc.lambda,
        threshold: cfg.auc.threshold,
        c_grid: cfg.c_grid.clone(),
        baseline: cfg.baseline,
        seed: cfg.seed,
    };
    let result = compare(&prepared, &settings)?;

    let dir = &cfg.out_dir;
    let mut csv = format!("{COMPARISON_CSV_HEADER}\n");
    for row in &result.rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    let mut out = Outputs::default();
    out.add(dir.join("comparison.csv"), csv.into_bytes());
    out.add_json(dir.join("comparison.json"), &result.rows)?;
    out.add(dir.join("scores.csv"), scores_csv(&result.scored).into_bytes());
    let mut outputs: Vec<PathBuf> = out.paths().map(Path::to_path_buf).collect();
    outputs.push(dir.join("manifest.json"));
    let tuning = |t: &crate::pipeline::TunedBaseline| Tuning {
        c: t.model.c,
        grid: t.grid.clone(),
    };
    let s = &result.auc_solve;
    out.add_json(
        dir.join("manifest.json"),
        &CompareManifest {
            command: "compare",
            config: cfg,
            data: run_summary(&data, &prepared),
            logistic: tuning(&result.logistic),
            svm: tuning(&result.svm),
            auc_solver: SolverSummary {
                converged: s.converged,
                iterations: s.iterations_used,
                final_grad_norm: s.final_grad_norm,
                step_size: s.step_size,
                skipped_updates: s.skipped_updates,
            },
            outputs,
        },
    )?;
    Ok(out)
}
