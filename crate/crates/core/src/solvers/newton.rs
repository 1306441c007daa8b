use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{Driver, SolveResult, SolverConfig, Status, TraceMonitor};
use crate::error::{Error, Result};
use crate::objective::SaddleObjective;

/// Pivot-ratio bound above which a saddle Hessian is treated as singular.
pub const MAX_CONDITION_ESTIMATE: f64 = 1e14;

/// Block `LDLᵀ` factorization of a saddle Hessian
///
/// ```text
/// [ Hxx  Hxy ]   [ I      0 ] [ Hxx  0 ] [ I  Hxx⁻¹Hxy ]
/// [ Hyx  Hyy ] = [ HyxHxx⁻¹ I ] [ 0    S ] [ 0  I        ]
/// ```
///
/// with `Hxx` positive definite and Schur complement `S = Hyy - Hyx Hxx⁻¹ Hxy`
/// negative definite, both factored by Cholesky.
pub struct SaddleFactorization {
    min_dim: usize,
    coupling: DMatrix<f64>,
    primal: Option<Cholesky<f64, Dyn>>,
    dual_neg_schur: Option<Cholesky<f64, Dyn>>,
    condition_estimate: f64,
}

impl SaddleFactorization {
    pub fn new(hessian: &DMatrix<f64>, min_dim: usize) -> Result<Self> {
        let n = hessian.nrows();
        if hessian.ncols() != n || min_dim > n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: hessian.ncols(),
            });
        }
        let k = n - min_dim;
        let hxx = hessian.view((0, 0), (min_dim, min_dim)).into_owned();
        let coupling = hessian.view((0, min_dim), (min_dim, k)).into_owned();
        let hyy = hessian.view((min_dim, min_dim), (k, k)).into_owned();

        let mut pivots = Vec::with_capacity(n);
        let primal = if min_dim > 0 {
            let chol = Cholesky::new(hxx).ok_or(Error::SingularHessian)?;
            pivots.extend(chol.l_dirty().diagonal().iter().map(|l| l * l));
            Some(chol)
        } else {
            None
        };
        let dual_neg_schur = if k > 0 {
            let mut schur = hyy;
            if let Some(chol) = &primal {
                let solved = chol.solve(&coupling);
                schur -= coupling.tr_mul(&solved);
            }
            let chol = Cholesky::new(-schur).ok_or(Error::SingularHessian)?;
            pivots.extend(chol.l_dirty().diagonal().iter().map(|l| l * l));
            Some(chol)
        } else {
            None
        };

        let max = pivots.iter().copied().fold(0.0, f64::max);
        let min = pivots.iter().copied().fold(f64::INFINITY, f64::min);
        let condition_estimate = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(condition_estimate <= MAX_CONDITION_ESTIMATE) {
            return Err(Error::SingularHessian);
        }
        Ok(Self {
            min_dim,
            coupling,
            primal,
            dual_neg_schur,
            condition_estimate,
        })
    }

    /// Ratio of largest to smallest pivot magnitude, a lower bound on `cond(Ĥ)`.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Solves `Ĥ s = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let m = self.min_dim;
        let k = rhs.len() - m;
        let rx = rhs.rows(0, m).into_owned();
        let ry = rhs.rows(m, k).into_owned();

        let hxx_inv_rx = match &self.primal {
            Some(chol) => chol.solve(&rx),
            None => rx.clone(),
        };
        let sy = match &self.dual_neg_schur {
            Some(chol) => {
                let reduced = ry - self.coupling.tr_mul(&hxx_inv_rx);
                -chol.solve(&reduced)
            }
            None => DVector::zeros(0),
        };
        let sx = match &self.primal {
            Some(chol) => chol.solve(&(rx - &self.coupling * &sy)),
            None => DVector::zeros(0),
        };
        let mut out = DVector::zeros(rhs.len());
        out.rows_mut(0, m).copy_from(&sx);
        out.rows_mut(m, k).copy_from(&sy);
        out
    }
}

/// Newton's method on the stacked variable: `z ← z - Ĥ⁻¹ g`, solved through
/// [`SaddleFactorization`].
pub fn solve_newton<O: SaddleObjective + ?Sized>(
    objective: &O,
    initial: &DVector<f64>,
    config: &SolverConfig,
    monitor: Option<&dyn TraceMonitor>,
) -> Result<SolveResult> {
    let mut driver = Driver::new(objective, initial, config, monitor)?;
    let mut z = initial.clone();
    let m = objective.min_dim();
    let mut cached: Option<SaddleFactorization> = None;
    for t in 0.. {
        let g = match driver.check(t, &z, None, 0)? {
            Status::Stop(result) => return Ok(result),
            Status::Continue(g) => g,
        };
        if cached.is_none() || !objective.hessian_is_constant() {
            cached = Some(SaddleFactorization::new(&objective.hessian(&z), m)?);
        }
        let step = cached.as_ref().expect("factorization present").solve(&g);
        z -= step;
    }
    unreachable!("iteration loop exits through the driver")
}
