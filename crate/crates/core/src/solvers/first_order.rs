use nalgebra::DVector;

use super::{
    descent_ascent_step, spectral_norm_estimate, Driver, Method, SolveResult, SolverConfig, Status,
    TraceMonitor,
};
use crate::error::{Error, Result};
use crate::objective::SaddleObjective;

fn resolve_step<O: SaddleObjective + ?Sized>(
    objective: &O,
    z: &DVector<f64>,
    config: &SolverConfig,
) -> Result<f64> {
    if let Some(eta) = config.step_size {
        return Ok(eta);
    }
    let norm = spectral_norm_estimate(objective, z);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidParameter(
            "cannot derive a default step size from a zero Hessian".into(),
        ));
    }
    Ok(0.5 / norm)
}

/// Gradient descent ascent, simultaneous or alternating per `config.method`.
///
/// Alternating mode updates `y` with the gradient evaluated at the already
/// updated `x`.
pub fn solve_gda<O: SaddleObjective + ?Sized>(
    objective: &O,
    initial: &DVector<f64>,
    config: &SolverConfig,
    monitor: Option<&dyn TraceMonitor>,
) -> Result<SolveResult> {
    let alternating = match config.method {
        Method::SimGda => false,
        Method::AltGda => true,
        other => {
            return Err(Error::InvalidParameter(format!(
                "solve_gda called with method {other:?}"
            )))
        }
    };
    let mut driver = Driver::new(objective, initial, config, monitor)?;
    let mut z = initial.clone();
    let eta = resolve_step(objective, &z, config)?;
    let m = objective.min_dim();
    for t in 0.. {
        let g = match driver.check(t, &z, Some(eta), 0)? {
            Status::Stop(result) => return Ok(result),
            Status::Continue(g) => g,
        };
        if alternating {
            for i in 0..m {
                z[i] -= eta * g[i];
            }
            let g_mid = objective.gradient(&z);
            for i in m..z.len() {
                z[i] += eta * g_mid[i];
            }
        } else {
            descent_ascent_step(&mut z, &g, eta, m);
        }
    }
    unreachable!("iteration loop exits through the driver")
}

/// ExtraGradient: a descent-ascent half step to a mid-point, then a full step
/// from the current iterate using the mid-point gradient.
pub fn solve_extragradient<O: SaddleObjective + ?Sized>(
    objective: &O,
    initial: &DVector<f64>,
    config: &SolverConfig,
    monitor: Option<&dyn TraceMonitor>,
) -> Result<SolveResult> {
    let mut driver = Driver::new(objective, initial, config, monitor)?;
    let mut z = initial.clone();
    let eta = resolve_step(objective, &z, config)?;
    let m = objective.min_dim();
    for t in 0.. {
        let g = match driver.check(t, &z, Some(eta), 0)? {
            Status::Stop(result) => return Ok(result),
            Status::Continue(g) => g,
        };
        let mut mid = z.clone();
        descent_ascent_step(&mut mid, &g, eta, m);
        let g_mid = objective.gradient(&mid);
        descent_ascent_step(&mut z, &g_mid, eta, m);
    }
    unreachable!("iteration loop exits through the driver")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::toys::ScalarQuadratic;

    fn cfg(method: Method, eta: f64, max_iterations: usize, tol: f64) -> SolverConfig {
        SolverConfig {
            method,
            step_size: Some(eta),
            max_iterations,
            grad_tolerance: tol,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn alt_gda_solves_separable_toy() {
        let toy = ScalarQuadratic::separable();
        let z0 = DVector::from_vec(vec![1.0, 1.0]);
        let r = solve_gda(&toy, &z0, &cfg(Method::AltGda, 0.5, 100, 1e-3), None).unwrap();
        assert!(r.converged);
        assert!(r.iterations_used <= 100);
        assert!(r.final_state.norm() <= 1e-3);
    }

    #[test]
    fn converged_start_returns_immediately() {
        let toy = ScalarQuadratic::separable();
        let z0 = DVector::from_vec(vec![0.0, 0.0]);
        for method in [Method::SimGda, Method::AltGda] {
            let r = solve_gda(&toy, &z0, &cfg(method, 0.5, 100, 1e-3), None).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations_used, 0);
            assert_eq!(r.trace.len(), 1);
        }
        let r = solve_extragradient(&toy, &z0, &cfg(Method::Extragradient, 0.5, 100, 1e-3), None)
            .unwrap();
        assert_eq!(r.iterations_used, 0);
    }

    #[test]
    fn bilinear_toy_separates_gda_and_eg() {
        // Closed forms on f = xy with eta = 1/2: sim-GDA multiplies the norm by
        // sqrt(1 + eta^2) per step, EG by sqrt((1 - eta^2)^2 + eta^2).
        let toy = ScalarQuadratic::bilinear();
        let z0 = DVector::from_vec(vec![1.0, 1.0]);
        let sim = solve_gda(&toy, &z0, &cfg(Method::SimGda, 0.5, 50, 1e-12), None).unwrap();
        let eg = solve_extragradient(&toy, &z0, &cfg(Method::Extragradient, 0.5, 50, 1e-12), None)
            .unwrap();
        let growth = 1.25f64.sqrt();
        let shrink = 0.8125f64.sqrt();
        for w in sim.trace.windows(2) {
            assert!(w[1].grad_norm > w[0].grad_norm);
            assert!((w[1].grad_norm / w[0].grad_norm - growth).abs() < 1e-12);
        }
        for w in eg.trace.windows(2) {
            assert!(w[1].grad_norm < w[0].grad_norm);
            assert!((w[1].grad_norm / w[0].grad_norm - shrink).abs() < 1e-12);
        }
        assert_eq!(sim.trace.len(), 51);
    }

    #[test]
    fn divergence_is_detected() {
        let toy = ScalarQuadratic::bilinear();
        let z0 = DVector::from_vec(vec![1.0, 1.0]);
        let err = solve_gda(&toy, &z0, &cfg(Method::SimGda, 10.0, 100_000, 1e-3), None).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
        assert!(err.to_string().starts_with("diverged (step size too large)"));
    }

    #[test]
    fn trace_thins_after_dense_prefix() {
        // Sim-GDA on the bilinear toy with a tiny step barely moves, so the
        // run hits the iteration cap.
        let toy = ScalarQuadratic::bilinear();
        let z0 = DVector::from_vec(vec![1.0, 1.0]);
        let r = solve_gda(&toy, &z0, &cfg(Method::SimGda, 1e-6, 10_105, 1e-12), None).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations_used, 10_105);
        let iters: Vec<usize> = r.trace.iter().map(|row| row.iteration).collect();
        assert!(iters.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(iters[9_999], 9_999);
        assert_eq!(iters[10_000], 10_000);
        assert_eq!(iters[10_001], 10_010);
        assert_eq!(*iters.last().unwrap(), 10_105);
    }
}
