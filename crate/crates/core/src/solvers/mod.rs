//! Saddle-point solvers for [`SaddleObjective`]s.
//!
//! First-order methods ([`solve_gda`], [`solve_extragradient`]) and
//! second-order methods ([`solve_newton`], [`solve_quasi_newton`]) share one
//! termination contract: stop as soon as the stacked gradient norm drops to
//! `grad_tolerance`, or after `max_iterations` steps.

mod first_order;
mod newton;
mod quasi_newton;
mod trace;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{PrimalDualState, SaddleObjective};

pub use first_order::{solve_extragradient, solve_gda};
pub use newton::{solve_newton, SaddleFactorization};
pub use quasi_newton::{
    broyden_update, greedy_direction, solve_quasi_newton, solve_quasi_newton_inspected, BroydenOutcome,
    HessianApprox,
};
pub use trace::{write_trace_csv, TRACE_HEADER};

pub const DEFAULT_MAX_ITERATIONS: usize = 50_000;
pub const DEFAULT_GRAD_TOLERANCE: f64 = 1e-3;
/// Gradient norm above which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Rows recorded densely before first-order traces switch to every 10th iteration.
pub const DENSE_TRACE_ROWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SimGda,
    AltGda,
    Extragradient,
    Newton,
    QnBroyden,
}

impl Method {
    pub fn is_second_order(self) -> bool {
        matches!(self, Method::Newton | Method::QnBroyden)
    }
}

/// Member of the Broyden family used by the quasi-Newton solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BroydenTau {
    /// `τ = 0`
    Sr1,
    /// `τ = 1`
    Dfp,
    /// `τ = uᵀHu / uᵀQu`, chosen per update.
    Bfgs,
    Fixed(f64),
}

impl BroydenTau {
    pub fn validate(self) -> Result<()> {
        match self {
            BroydenTau::Fixed(t) if !(0.0..=1.0).contains(&t) => Err(Error::InvalidParameter(
                format!("broyden tau must lie in [0, 1], got {t}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionRule {
    RandomGaussian,
    GreedyBasis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// First-order step size; `None` selects `1 / (2 L̂)` with `L̂ ≈ ‖Ĥ‖₂`.
    pub step_size: Option<f64>,
    pub max_iterations: usize,
    pub grad_tolerance: f64,
    pub broyden_tau: BroydenTau,
    pub direction_rule: DirectionRule,
    pub updates_per_iteration: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::AltGda,
            step_size: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            grad_tolerance: DEFAULT_GRAD_TOLERANCE,
            broyden_tau: BroydenTau::Sr1,
            direction_rule: DirectionRule::GreedyBasis,
            updates_per_iteration: 1,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(eta) = self.step_size {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidParameter(format!("step size must be > 0, got {eta}")));
            }
        }
        if !(self.grad_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gradient tolerance must be > 0, got {}",
                self.grad_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if self.updates_per_iteration == 0 {
            return Err(Error::InvalidParameter("updates_per_iteration must be >= 1".into()));
        }
        self.broyden_tau.validate()
    }
}

/// One logged iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub grad_norm: f64,
    pub objective: f64,
    pub train_auc: Option<f64>,
    pub test_auc: Option<f64>,
    /// Cumulative Broyden updates skipped for degenerate curvature pairs.
    pub skipped_updates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Final stacked iterate `[x; y]`.
    pub final_state: DVector<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    pub final_grad_norm: f64,
    /// Step size used by first-order methods.
    pub step_size: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub skipped_updates: usize,
}

impl SolveResult {
    /// Final iterate unpacked as `(w, u, v, y)` for the AUC objective.
    pub fn state(&self) -> Result<PrimalDualState> {
        PrimalDualState::from_stacked(&self.final_state)
    }
}

/// Optional per-iteration evaluation hook for the trace's AUC columns.
pub trait TraceMonitor {
    /// Returns `(train_auc, test_auc)` at the stacked iterate `z`.
    fn evaluate(&self, z: &DVector<f64>) -> (Option<f64>, Option<f64>);
}

/// Runs the solver selected by `config.method`.
pub fn solve<O: SaddleObjective + ?Sized>(
    objective: &O,
    initial: &DVector<f64>,
    config: &SolverConfig,
    monitor: Option<&dyn TraceMonitor>,
) -> Result<SolveResult> {
    match config.method {
        Method::SimGda | Method::AltGda => solve_gda(objective, initial, config, monitor),
        Method::Extragradient => solve_extragradient(objective, initial, config, monitor),
        Method::Newton => solve_newton(objective, initial, config, monitor),
        Method::QnBroyden => solve_quasi_newton(objective, initial, config, monitor),
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
pub fn power_iteration<F>(dim: usize, apply: F) -> f64
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e_ed0f_90e3);
    let mut v = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
    v.normalize_mut();
    let mut estimate = 0.0;
    for iter in 0..10_000 {
        let mv = apply(&v);
        let rayleigh = v.dot(&mv);
        let norm = mv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = mv / norm;
        if iter >= 10 && (rayleigh - estimate).abs() <= 1e-12 * rayleigh.abs() {
            return rayleigh;
        }
        estimate = rayleigh;
    }
    estimate
}

/// `‖Ĥ‖₂` at `z`, estimated by power iteration on `Ĥ²`.
pub fn spectral_norm_estimate<O: SaddleObjective + ?Sized>(objective: &O, z: &DVector<f64>) -> f64 {
    power_iteration(objective.dim(), |v| {
        let hv = objective.hessian_vec(z, v);
        objective.hessian_vec(z, &hv)
    })
    .sqrt()
}

/// Shared termination and trace bookkeeping.
struct Driver<'a, O: ?Sized> {
    objective: &'a O,
    config: &'a SolverConfig,
    monitor: Option<&'a dyn TraceMonitor>,
    dense_only: bool,
    trace: Vec<TraceRow>,
}

enum Status {
    Continue(DVector<f64>),
    Stop(SolveResult),
}

impl<'a, O: SaddleObjective + ?Sized> Driver<'a, O> {
    fn new(
        objective: &'a O,
        initial: &DVector<f64>,
        config: &'a SolverConfig,
        monitor: Option<&'a dyn TraceMonitor>,
    ) -> Result<Self> {
        config.validate()?;
        if initial.len() != objective.dim() {
            return Err(Error::DimensionMismatch {
                expected: objective.dim(),
                actual: initial.len(),
            });
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        Ok(Self {
            objective,
            config,
            monitor,
            dense_only: config.method.is_second_order(),
            trace: Vec::new(),
        })
    }

    /// Evaluates the gradient at iterate `t`, logs it and decides whether to stop.
    fn check(
        &mut self,
        iteration: usize,
        z: &DVector<f64>,
        step_size: Option<f64>,
        skipped_updates: usize,
    ) -> Result<Status> {
        let g = self.objective.gradient(z);
        let grad_norm = g.norm();
        if !grad_norm.is_finite() || grad_norm > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { iteration, grad_norm });
        }
        let converged = grad_norm <= self.config.grad_tolerance;
        let stop = converged || iteration >= self.config.max_iterations;
        let record = stop
            || self.dense_only
            || self.trace.len() < DENSE_TRACE_ROWS
            || iteration.is_multiple_of(10);
        if record {
            let (train_auc, test_auc) = self.monitor.map_or((None, None), |m| m.evaluate(z));
            self.trace.push(TraceRow {
                iteration,
                grad_norm,
                objective: self.objective.value(z),
                train_auc,
                test_auc,
                skipped_updates,
            });
        }
        if stop {
            return Ok(Status::Stop(SolveResult {
                final_state: z.clone(),
                converged,
                iterations_used: iteration,
                final_grad_norm: grad_norm,
                step_size,
                trace: std::mem::take(&mut self.trace),
                skipped_updates,
            }));
        }
        Ok(Status::Continue(g))
    }
}

/// Applies `z -= eta * D g`, where `D` flips the sign on the maximization block.
fn descent_ascent_step(z: &mut DVector<f64>, g: &DVector<f64>, eta: f64, min_dim: usize) {
    for (i, (zi, gi)) in z.iter_mut().zip(g.iter()).enumerate() {
        if i < min_dim {
            *zi -= eta * gi;
        } else {
            *zi += eta * gi;
        }
    }
}
