//! Command-line surface.

use std::path::PathBuf;

use aucmax::signal::FeatureSet;
use aucmax::solvers::BroydenTau;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "aucmax", version, about = "Train and compare AUC-maximizing linear classifiers")]
pub struct Cli {
    /// JSON file with default values for any flag (flags take precedence).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random choice; falls back to $AUCMAX_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a two-class Gaussian feature CSV.
    Synth(SynthArgs),
    /// Extract window features from trial signal files.
    Extract(ExtractArgs),
    /// Train one model on an 80/20 split.
    Train(TrainArgs),
    /// Score a feature CSV with a trained model.
    Eval(EvalArgs),
    /// Train logistic regression, linear SVM and the AUC maximizer on one split.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub pos_frac: Option<f64>,
    #[arg(long)]
    pub sep: Option<f64>,
    /// Output CSV; the manifest goes next to it as `<stem>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Trial files (`.csv`, or `.bin`/`.dat` for the binary layout).
    #[arg(required = true)]
    pub signals: Vec<PathBuf>,
    /// CSV of `trial,label` pairs; the trial id is the signal file stem.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Feature set 1-4.
    #[arg(long, value_parser = parse_feature_set)]
    pub set: Option<FeatureSet>,
    /// Window length in seconds.
    #[arg(long)]
    pub window: Option<f64>,
    /// Window stride in seconds.
    #[arg(long)]
    pub stride: Option<f64>,
    /// 1-based channel numbers.
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<usize>>,
    #[arg(long)]
    pub filter_order: Option<u32>,
    /// Correlation lags in samples.
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    /// Centre lagged correlations on the overlapping samples only.
    #[arg(long)]
    pub overlap_means: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    SimGda,
    AltGda,
    #[value(alias = "eg")]
    #[serde(alias = "eg")]
    Extragradient,
    Newton,
    /// Broyden-family quasi-Newton; see `--broyden`.
    Qn,
    Logistic,
    Svm,
}

impl SolverName {
    pub fn is_baseline(self) -> bool {
        matches!(self, SolverName::Logistic | SolverName::Svm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionName {
    Greedy,
    Random,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum)]
    pub solver: Option<SolverName>,
    /// Ridge weight on `[w; u; v]`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// First-order step size (default `1 / (2 L)` from a power iteration).
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Broyden member: `sr1`, `dfp`, `bfgs` or a fixed tau in [0, 1].
    #[arg(long, value_parser = parse_broyden)]
    pub broyden: Option<BroydenTau>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionName>,
    /// Curvature updates per quasi-Newton iteration.
    #[arg(long)]
    pub updates: Option<usize>,
    /// Score cut-off for the AUC model (default: midpoint of u and v).
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Shuffle without preserving the class ratio.
    #[arg(long)]
    pub no_stratify: bool,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Candidate values of C, tuned by validation AUC.
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub baseline_tol: Option<f64>,
    #[arg(long)]
    pub baseline_max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub baseline: BaselineArgs,
    /// Fixed C for `logistic`/`svm` (skips tuning).
    #[arg(long = "c")]
    pub c: Option<f64>,
    /// Leave the train/test AUC columns of the trace empty.
    #[arg(long)]
    pub no_trace_auc: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub baseline: BaselineArgs,
}

pub fn parse_feature_set(s: &str) -> Result<FeatureSet, String> {
    s.parse().map_err(|e: aucmax::Error| e.to_string())
}

pub fn parse_broyden(s: &str) -> Result<BroydenTau, String> {
    let tau = match s.to_ascii_lowercase().as_str() {
        "sr1" => BroydenTau::Sr1,
        "dfp" => BroydenTau::Dfp,
        "bfgs" => BroydenTau::Bfgs,
        other => BroydenTau::Fixed(
            other
                .parse()
                .map_err(|_| format!("expected sr1, dfp, bfgs or a number, got '{s}'"))?,
        ),
    };
    tau.validate().map_err(|e| e.to_string())?;
    Ok(tau)
}
