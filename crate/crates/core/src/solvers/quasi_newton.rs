//! Broyden-family quasi-Newton solver for saddle problems.
//!
//! The Newton step is rewritten as `z ← z - H⁻¹ Ĥ g` with `H = Ĥ²` positive
//! definite, and `H` is replaced by an approximation `Q ⪰ H` refined by
//! Broyden-family updates along selected directions.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    power_iteration, BroydenTau, DirectionRule, Driver, SolveResult, SolverConfig, Status,
    TraceMonitor,
};
use crate::error::{Error, Result};
use crate::objective::SaddleObjective;

/// Relative threshold on `⟨(Q-H)u, u⟩ / ‖u‖²` below which SR1 is skipped.
const SR1_SKIP_TOLERANCE: f64 = 1e-12;
/// Initial `Q = c I` uses `c = 1.01 λ_max(H)`.
const INITIAL_SCALE_MARGIN: f64 = 1.01;

/// Symmetric positive definite approximation `Q` of `H = Ĥ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianApprox(DMatrix<f64>);

impl HessianApprox {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::InvalidCurvature("Q must be square".into()));
        }
        let scale = q.amax().max(f64::MIN_POSITIVE);
        if (&q - q.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidCurvature("Q must be symmetric".into()));
        }
        Ok(Self(q))
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        Self(DMatrix::identity(dim, dim) * c)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Result of one Broyden-family update.
#[derive(Debug, Clone, PartialEq)]
pub struct BroydenOutcome {
    pub approx: HessianApprox,
    /// The `τ` actually used (resolved per update for BFGS).
    pub tau: f64,
    /// SR1 component left unchanged: degenerate `⟨(Q-H)u, u⟩`.
    pub sr1_skipped: bool,
    /// DFP component left unchanged: `⟨Hu, u⟩ <= 0`.
    pub dfp_skipped: bool,
}

impl BroydenOutcome {
    /// True when a component carrying nonzero weight was skipped.
    pub fn skipped(&self) -> bool {
        (self.sr1_skipped && self.tau < 1.0) || (self.dfp_skipped && self.tau > 0.0)
    }
}

fn rank_one(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose()
}

/// `Broyd_τ(Q, H, u) = τ DFP(Q, H, u) + (1 - τ) SR1(Q, H, u)`.
///
/// A component whose denominator is degenerate returns `Q` unchanged and is
/// flagged in the outcome.
pub fn broyden_update(
    q: &HessianApprox,
    h: &DMatrix<f64>,
    u: &DVector<f64>,
    tau: BroydenTau,
) -> Result<BroydenOutcome> {
    tau.validate()?;
    let qm = q.matrix();
    if h.shape() != qm.shape() || u.len() != qm.nrows() {
        return Err(Error::DimensionMismatch {
            expected: qm.nrows(),
            actual: u.len(),
        });
    }
    let u_norm_sq = u.norm_squared();
    if u_norm_sq == 0.0 {
        return Err(Error::InvalidParameter("update direction must be nonzero".into()));
    }
    let qu = qm * u;
    let hu = h * u;
    let uqu = qu.dot(u);
    let uhu = hu.dot(u);

    let tau = match tau {
        BroydenTau::Sr1 => 0.0,
        BroydenTau::Dfp => 1.0,
        BroydenTau::Bfgs => (uhu / uqu).clamp(0.0, 1.0),
        BroydenTau::Fixed(t) => t,
    };

    let mut sr1_skipped = false;
    let sr1 = if tau < 1.0 {
        let r = &qu - &hu;
        let denom = r.dot(u);
        if denom <= SR1_SKIP_TOLERANCE * u_norm_sq {
            sr1_skipped = true;
            qm.clone()
        } else {
            qm - rank_one(&r, &r) / denom
        }
    } else {
        qm.clone()
    };

    let mut dfp_skipped = false;
    let dfp = if tau > 0.0 {
        if uhu <= 0.0 {
            dfp_skipped = true;
            qm.clone()
        } else {
            let cross = rank_one(&hu, &qu) + rank_one(&qu, &hu);
            qm - cross / uhu + rank_one(&hu, &hu) * ((1.0 + uqu / uhu) / uhu)
        }
    } else {
        qm.clone()
    };

    let mut next = dfp * tau + sr1 * (1.0 - tau);
    let sym = (&next + next.transpose()) * 0.5;
    next = sym;
    Ok(BroydenOutcome {
        approx: HessianApprox(next),
        tau,
        sr1_skipped,
        dfp_skipped,
    })
}

/// Index `i` maximizing `Q_ii / H_ii`; ties go to the lowest index.
pub fn greedy_direction(q: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<usize> {
    if q.shape() != h.shape() || !q.is_square() || q.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: q.nrows(),
            actual: h.nrows(),
        });
    }
    let mut best = 0;
    let mut best_ratio = f64::NEG_INFINITY;
    for i in 0..q.nrows() {
        let hii = h[(i, i)];
        if !(hii > 0.0) {
            return Err(Error::InvalidCurvature(format!(
                "diagonal entry {i} of H is {hii}, expected > 0"
            )));
        }
        let ratio = q[(i, i)] / hii;
        if ratio > best_ratio {
            best = i;
            best_ratio = ratio;
        }
    }
    Ok(best)
}

fn squared(hessian: &DMatrix<f64>) -> DMatrix<f64> {
    let h = hessian * hessian;
    (&h + h.transpose()) * 0.5
}

/// Quasi-Newton iteration `z ← z - Q⁻¹ Ĥ g` with `k` Broyden updates of `Q`
/// per iteration along greedy basis or Gaussian directions.
///
/// `Q` starts at `1.01 λ_max(H) I`; with a constant Hessian every update keeps
/// `Q ⪰ H`.
pub fn solve_quasi_newton<O: SaddleObjective + ?Sized>(
    objective: &O,
    initial: &DVector<f64>,
    config: &SolverConfig,
    monitor: Option<&dyn TraceMonitor>,
) -> Result<SolveResult> {
    let (result, _) = solve_quasi_newton_inspected(objective, initial, config, monitor, |_, _| {})?;
    Ok(result)
}

/// Same as [`solve_quasi_newton`], calling `inspect(Q, H)` after each
/// iteration's updates.
pub fn solve_quasi_newton_inspected<O, F>(
    objective: &O,
    initial: &DVector<f64>,
    config: &SolverConfig,
    monitor: Option<&dyn TraceMonitor>,
    mut inspect: F,
) -> Result<(SolveResult, HessianApprox)>
where
    O: SaddleObjective + ?Sized,
    F: FnMut(&DMatrix<f64>, &DMatrix<f64>),
{
    let mut driver = Driver::new(objective, initial, config, monitor)?;
    let n = objective.dim();
    let mut z = initial.clone();
    let mut hessian = objective.hessian(&z);
    let mut h = squared(&hessian);
    let top = power_iteration(n, |v| &h * v);
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::SingularHessian);
    }
    let mut q = HessianApprox::scaled_identity(n, INITIAL_SCALE_MARGIN * top);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut skipped = 0usize;

    for t in 0.. {
        let g = match driver.check(t, &z, None, skipped)? {
            Status::Stop(result) => return Ok((result, q)),
            Status::Continue(g) => g,
        };
        let chol = Cholesky::new(q.matrix().clone()).ok_or(Error::SingularHessian)?;
        let step = chol.solve(&(&hessian * &g));
        z -= step;

        if !objective.hessian_is_constant() {
            hessian = objective.hessian(&z);
            h = squared(&hessian);
        }
        for _ in 0..config.updates_per_iteration {
            let u = match config.direction_rule {
                DirectionRule::GreedyBasis => {
                    let i = greedy_direction(q.matrix(), &h)?;
                    let mut e = DVector::zeros(n);
                    e[i] = 1.0;
                    e
                }
                DirectionRule::RandomGaussian => {
                    DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))
                }
            };
            let outcome = broyden_update(&q, &h, &u, config.broyden_tau)?;
            if outcome.skipped() {
                skipped += 1;
            }
            q = outcome.approx;
        }
        inspect(q.matrix(), &h);
    }
    unreachable!("iteration loop exits through the driver")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(values))
    }

    #[test]
    fn sr1_hand_example() {
        let q = HessianApprox::new(diag(&[2.0, 2.0])).unwrap();
        let h = DMatrix::identity(2, 2);
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let out = broyden_update(&q, &h, &u, BroydenTau::Sr1).unwrap();
        assert_eq!(out.approx.matrix(), &diag(&[1.0, 2.0]));
        assert!(!out.skipped());
    }

    #[test]
    fn bfgs_fixed_point_when_q_equals_h() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let q = HessianApprox::new(h.clone()).unwrap();
        let u = DVector::from_vec(vec![0.3, -1.2]);
        let out = broyden_update(&q, &h, &u, BroydenTau::Bfgs).unwrap();
        assert_eq!(out.tau, 1.0);
        assert!((out.approx.matrix() - &h).amax() < 1e-14);
    }

    #[test]
    fn sr1_skips_when_q_equals_h() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let q = HessianApprox::new(h.clone()).unwrap();
        let u = DVector::from_vec(vec![1.0, 1.0]);
        let out = broyden_update(&q, &h, &u, BroydenTau::Sr1).unwrap();
        assert!(out.sr1_skipped);
        assert!(out.skipped());
        assert_eq!(out.approx.matrix(), &h);
    }

    #[test]
    fn greedy_examples() {
        let eye2 = DMatrix::identity(2, 2);
        assert_eq!(greedy_direction(&diag(&[2.0, 1.0]), &eye2).unwrap(), 0);
        assert_eq!(greedy_direction(&eye2, &eye2).unwrap(), 0);
        assert_eq!(
            greedy_direction(&diag(&[1.0, 1.0, 5.0]), &DMatrix::identity(3, 3)).unwrap(),
            2
        );
        assert!(matches!(
            greedy_direction(&eye2, &diag(&[1.0, 0.0])),
            Err(Error::InvalidCurvature(_))
        ));
    }

    #[test]
    fn zero_direction_rejected() {
        let q = HessianApprox::scaled_identity(2, 2.0);
        let h = DMatrix::identity(2, 2);
        assert!(broyden_update(&q, &h, &DVector::zeros(2), BroydenTau::Sr1).is_err());
    }

    #[test]
    fn asymmetric_q_rejected() {
        assert!(HessianApprox::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).is_err());
    }
}
