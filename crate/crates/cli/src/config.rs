//! Config-file loading and flag resolution (flags > config file > defaults).

use std::fmt;
use std::path::{Path, PathBuf};

use aucmax::baselines::{ModelKind, DEFAULT_C_GRID};
use aucmax::data::{SplitSpec, SynthSpec};
use aucmax::signal::{BandDef, CorrelationMeans, FeatureLayout, FeatureSet, WindowSpec};
use aucmax::solvers::{BroydenTau, DirectionRule, Method, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::cli::{
    parse_broyden, BaselineArgs, CompareArgs, DirectionName, ExtractArgs, SolverArgs, SolverName, SplitArgs,
    SynthArgs, TrainArgs,
};
use crate::pipeline::BaselineOptions;

pub const SEED_ENV: &str = "AUCMAX_SEED";

/// A problem with how the program was invoked (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Keys accepted in the `--config` JSON file. Each mirrors the flag of the
/// same name with `_` for `-`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,

    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub pos_frac: Option<f64>,
    pub sep: Option<f64>,

    pub set: Option<FeatureSet>,
    pub window: Option<f64>,
    pub stride: Option<f64>,
    pub channels: Option<Vec<usize>>,
    pub bands: Option<Vec<BandDef>>,
    pub filter_order: Option<u32>,
    pub lags: Option<Vec<usize>>,
    pub overlap_means: Option<bool>,

    pub solver: Option<SolverName>,
    pub lambda: Option<f64>,
    pub step_size: Option<f64>,
    pub max_iterations: Option<usize>,
    pub grad_tol: Option<f64>,
    pub broyden: Option<String>,
    pub direction: Option<DirectionName>,
    pub updates: Option<usize>,
    pub threshold: Option<f64>,

    pub train_fraction: Option<f64>,
    pub stratified: Option<bool>,

    pub c: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub baseline_tol: Option<f64>,
    pub baseline_max_iterations: Option<usize>,
    pub trace_auc: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// `--seed`, then the config file, then `$AUCMAX_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig, env: Option<String>) -> anyhow::Result<u64> {
    if let Some(seed) = flag.or(file.seed) {
        return Ok(seed);
    }
    match env {
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got '{raw}'"))),
        None => Ok(0),
    }
}

fn check(result: aucmax::Result<()>) -> anyhow::Result<()> {
    result.map_err(|e| usage(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthConfig {
    pub out: PathBuf,
    pub spec: SynthSpec,
}

pub fn synth_config(args: &SynthArgs, file: &FileConfig, seed: u64) -> anyhow::Result<SynthConfig> {
    let d = SynthSpec::default();
    let spec = SynthSpec {
        n_samples: args.n.or(file.n).unwrap_or(d.n_samples),
        n_features: args.dim.or(file.dim).unwrap_or(d.n_features),
        positive_fraction: args.pos_frac.or(file.pos_frac).unwrap_or(d.positive_fraction),
        class_separation: args.sep.or(file.sep).unwrap_or(d.class_separation),
        seed,
    };
    check(spec.validate())?;
    Ok(SynthConfig {
        out: args.out.clone(),
        spec,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractConfig {
    pub signals: Vec<PathBuf>,
    pub labels: PathBuf,
    pub out: PathBuf,
    pub set: FeatureSet,
    /// `None` selects the standard 14-electrode montage when the trial has
    /// enough channels, otherwise every channel.
    pub channels_one_based: Option<Vec<usize>>,
    pub window: WindowSpec,
    pub layout: FeatureLayout,
}

pub fn extract_config(args: &ExtractArgs, file: &FileConfig) -> anyhow::Result<ExtractConfig> {
    let dw = WindowSpec::default();
    let dl = FeatureLayout::default();
    let channels = args.channels.clone().or_else(|| file.channels.clone());
    if let Some(ch) = &channels {
        if ch.is_empty() || ch.contains(&0) {
            return Err(usage("channels are 1-based and must be non-empty"));
        }
    }
    let overlap = args.overlap_means || file.overlap_means.unwrap_or(false);
    Ok(ExtractConfig {
        signals: args.signals.clone(),
        labels: args.labels.clone(),
        out: args.out.clone(),
        set: args.set.or(file.set).unwrap_or(FeatureSet::Set1),
        channels_one_based: channels,
        window: WindowSpec {
            window_seconds: args.window.or(file.window).unwrap_or(dw.window_seconds),
            stride_seconds: args.stride.or(file.stride).unwrap_or(dw.stride_seconds),
        },
        layout: FeatureLayout {
            bands: file.bands.clone().unwrap_or(dl.bands),
            filter_order: args.filter_order.or(file.filter_order).unwrap_or(dl.filter_order),
            correlation_lags: args.lags.clone().or_else(|| file.lags.clone()),
            correlation_means: if overlap {
                CorrelationMeans::Overlap
            } else {
                CorrelationMeans::FullSeries
            },
        },
    })
}

fn solver_config(args: &SolverArgs, file: &FileConfig, name: SolverName, seed: u64) -> anyhow::Result<SolverConfig> {
    let method = match name {
        SolverName::SimGda => Method::SimGda,
        SolverName::AltGda => Method::AltGda,
        SolverName::Extragradient => Method::Extragradient,
        SolverName::Newton => Method::Newton,
        SolverName::Qn => Method::QnBroyden,
        SolverName::Logistic | SolverName::Svm => Method::AltGda,
    };
    let broyden = match (args.broyden, &file.broyden) {
        (Some(tau), _) => tau,
        (None, Some(raw)) => parse_broyden(raw).map_err(usage)?,
        (None, None) => BroydenTau::Sr1,
    };
    let d = SolverConfig::default();
    let cfg = SolverConfig {
        method,
        step_size: args.step_size.or(file.step_size),
        max_iterations: args.max_iterations.or(file.max_iterations).unwrap_or(d.max_iterations),
        grad_tolerance: args.grad_tol.or(file.grad_tol).unwrap_or(d.grad_tolerance),
        broyden_tau: broyden,
        direction_rule: match args.direction.or(file.direction) {
            Some(DirectionName::Random) => DirectionRule::RandomGaussian,
            Some(DirectionName::Greedy) | None => DirectionRule::GreedyBasis,
        },
        updates_per_iteration: args.updates.or(file.updates).unwrap_or(d.updates_per_iteration),
        rng_seed: seed,
    };
    check(cfg.validate())?;
    Ok(cfg)
}

fn split_spec(args: &SplitArgs, file: &FileConfig, seed: u64) -> anyhow::Result<SplitSpec> {
    let spec = SplitSpec {
        train_fraction: args.train_fraction.or(file.train_fraction).unwrap_or(0.8),
        seed,
        stratified: !args.no_stratify && file.stratified.unwrap_or(true),
    };
    check(spec.validate())?;
    Ok(spec)
}

fn lambda(args: &SolverArgs, file: &FileConfig) -> anyhow::Result<f64> {
    let lambda = args.lambda.or(file.lambda).unwrap_or(aucmax::DEFAULT_LAMBDA);
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(usage(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(lambda)
}

fn threshold(args: &SolverArgs, file: &FileConfig) -> anyhow::Result<Option<f64>> {
    let t = args.threshold.or(file.threshold);
    if t.is_some_and(|t| !t.is_finite()) {
        return Err(usage("threshold must be finite"));
    }
    Ok(t)
}

fn positive(name: &str, v: f64) -> anyhow::Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("{name} must be > 0, got {v}")))
    }
}

fn baseline(args: &BaselineArgs, file: &FileConfig) -> anyhow::Result<(Vec<f64>, BaselineOptions)> {
    let grid = args
        .c_grid
        .clone()
        .or_else(|| file.c_grid.clone())
        .unwrap_or_else(|| DEFAULT_C_GRID.to_vec());
    if grid.is_empty() {
        return Err(usage("C grid is empty"));
    }
    for &c in &grid {
        positive("C", c)?;
    }
    let d = BaselineOptions::default();
    let opts = BaselineOptions {
        tolerance: positive("baseline tolerance", args.baseline_tol.or(file.baseline_tol).unwrap_or(d.tolerance))?,
        max_iterations: args
            .baseline_max_iterations
            .or(file.baseline_max_iterations)
            .unwrap_or(d.max_iterations),
    };
    Ok((grid, opts))
}

/// Settings for the AUC maximizer, echoed into manifests.
#[derive(Debug, Clone, Serialize)]
pub struct AucSettings {
    pub lambda: f64,
    pub solver: SolverConfig,
    /// `None` means the midpoint `(u + v) / 2`.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainConfig {
    pub data: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub model: SolverName,
    pub split: SplitSpec,
    pub standardize: bool,
    pub auc: AucSettings,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub c_grid: Vec<f64>,
    pub baseline: BaselineOptions,
    pub trace_auc: bool,
}

impl TrainConfig {
    pub fn baseline_kind(&self) -> Option<ModelKind> {
        match self.model {
            SolverName::Logistic => Some(ModelKind::Logistic),
            SolverName::Svm => Some(ModelKind::Svm),
            _ => None,
        }
    }
}

pub fn train_config(args: &TrainArgs, file: &FileConfig, seed: u64) -> anyhow::Result<TrainConfig> {
    let model = args.solver.solver.or(file.solver).unwrap_or(SolverName::AltGda);
    let (c_grid, baseline) = baseline(&args.baseline, file)?;
    let c = args.c.or(file.c).map(|c| positive("C", c)).transpose()?;
    Ok(TrainConfig {
        data: args.data.clone(),
        out_dir: args.out_dir.clone(),
        seed,
        model,
        split: split_spec(&args.split, file, seed)?,
        standardize: true,
        auc: AucSettings {
            lambda: lambda(&args.solver, file)?,
            solver: solver_config(&args.solver, file, model, seed)?,
            threshold: threshold(&args.solver, file)?,
        },
        c,
        c_grid,
        baseline,
        trace_auc: !args.no_trace_auc && file.trace_auc.unwrap_or(true),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareConfig {
    pub data: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub split: SplitSpec,
    pub standardize: bool,
    pub auc_solver: SolverName,
    pub auc: AucSettings,
    pub c_grid: Vec<f64>,
    pub validation_fraction: f64,
    pub baseline: BaselineOptions,
}

pub fn compare_config(args: &CompareArgs, file: &FileConfig, seed: u64) -> anyhow::Result<CompareConfig> {
    let solver = args.solver.solver.or(file.solver).unwrap_or(SolverName::AltGda);
    if solver.is_baseline() {
        return Err(usage("compare always fits both baselines; --solver selects the AUC solver"));
    }
    let (c_grid, baseline) = baseline(&args.baseline, file)?;
    Ok(CompareConfig {
        data: args.data.clone(),
        out_dir: args.out_dir.clone(),
        seed,
        split: split_spec(&args.split, file, seed)?,
        standardize: true,
        auc_solver: solver,
        auc: AucSettings {
            lambda: lambda(&args.solver, file)?,
            solver: solver_config(&args.solver, file, solver, seed)?,
            threshold: threshold(&args.solver, file)?,
        },
        c_grid,
        validation_fraction: crate::pipeline::VALIDATION_FRACTION,
        baseline,
    })
}
