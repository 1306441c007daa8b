//! The AUC square-loss minimax objective.
//!
//! For a linear scorer `s = wᵀa` and positive fraction `p`, each sample
//! contributes
//!
//! ```text
//! positive: (1-p) * ((s - u)^2 - 2(1 + y) s)
//! negative:     p * ((s - v)^2 + 2(1 + y) s)
//! ```
//!
//! and the full objective is the sample mean plus `(λ/2)‖[w; u; v]‖² - p(1-p)y²`.
//! It is jointly quadratic in the stacked variable `[w; u; v; y]`, convex in
//! the first block and strongly concave in `y`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{positive_fraction, LabeledDataset};
use crate::error::{Error, Result};

/// A smooth function minimized over the leading `min_dim` coordinates of the
/// stacked variable and maximized over the rest.
pub trait SaddleObjective {
    /// Length of the stacked variable `[x; y]`.
    fn dim(&self) -> usize;

    /// Number of leading coordinates belonging to the minimization block.
    fn min_dim(&self) -> usize;

    fn value(&self, z: &DVector<f64>) -> f64;

    fn gradient(&self, z: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, z: &DVector<f64>) -> DMatrix<f64>;

    fn hessian_vec(&self, z: &DVector<f64>, direction: &DVector<f64>) -> DVector<f64> {
        self.hessian(z) * direction
    }

    /// True when the Hessian does not depend on the evaluation point.
    fn hessian_is_constant(&self) -> bool {
        false
    }
}

/// Primal block `x = [w; u; v]` and dual scalar `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualState {
    pub w: Vec<f64>,
    pub u: f64,
    pub v: f64,
    pub y: f64,
}

impl PrimalDualState {
    pub fn zeros(dim: usize) -> Self {
        Self {
            w: vec![0.0; dim],
            u: 0.0,
            v: 0.0,
            y: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Packs into `[w; u; v; y]`.
    pub fn to_stacked(&self) -> DVector<f64> {
        let d = self.w.len();
        DVector::from_fn(d + 3, |i, _| match i {
            i if i < d => self.w[i],
            i if i == d => self.u,
            i if i == d + 1 => self.v,
            _ => self.y,
        })
    }

    pub fn from_stacked(z: &DVector<f64>) -> Result<Self> {
        if z.len() < 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                actual: z.len(),
            });
        }
        let d = z.len() - 3;
        Ok(Self {
            w: z.rows(0, d).iter().copied().collect(),
            u: z[d],
            v: z[d + 1],
            y: z[d + 2],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite())
            && self.u.is_finite()
            && self.v.is_finite()
            && self.y.is_finite()
    }
}

/// Regularization weight and positive fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    pub lambda: f64,
    pub p: f64,
}

pub const DEFAULT_LAMBDA: f64 = 1e-4;

impl ObjectiveParams {
    /// Parameters with `p` taken from the dataset's labels.
    pub fn for_dataset(dataset: &LabeledDataset, lambda: f64) -> Result<Self> {
        let p = positive_fraction(dataset.labels())?;
        Self::new(lambda, p)
    }

    pub fn new(lambda: f64, p: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
        }
        Ok(Self { lambda, p })
    }
}

/// The AUC minimax objective bound to a dataset.
#[derive(Debug)]
pub struct AucObjective<'a> {
    dataset: &'a LabeledDataset,
    params: ObjectiveParams,
    hessian: OnceLock<DMatrix<f64>>,
}

impl<'a> AucObjective<'a> {
    /// Fails when `params.p` is not the dataset's positive fraction.
    pub fn new(dataset: &'a LabeledDataset, params: ObjectiveParams) -> Result<Self> {
        let p = positive_fraction(dataset.labels())?;
        if (p - params.p).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "p = {} does not match dataset positive fraction {p}",
                params.p
            )));
        }
        Ok(Self {
            dataset,
            params,
            hessian: OnceLock::new(),
        })
    }

    pub fn with_lambda(dataset: &'a LabeledDataset, lambda: f64) -> Result<Self> {
        Self::new(dataset, ObjectiveParams::for_dataset(dataset, lambda)?)
    }

    pub fn params(&self) -> ObjectiveParams {
        self.params
    }

    pub fn dataset(&self) -> &LabeledDataset {
        self.dataset
    }

    /// Number of features `d`.
    pub fn feature_dim(&self) -> usize {
        self.dataset.dim()
    }

    fn check_state(&self, state: &PrimalDualState) -> Result<()> {
        if state.dim() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                actual: state.dim(),
            });
        }
        Ok(())
    }

    pub fn value_at(&self, state: &PrimalDualState) -> Result<f64> {
        self.check_state(state)?;
        let value = self.value(&state.to_stacked());
        if !value.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        Ok(value)
    }

    /// Returns `(∇ₓf, ∂f/∂y)` with `∇ₓf` ordered as `[w; u; v]`.
    pub fn gradient_at(&self, state: &PrimalDualState) -> Result<(DVector<f64>, f64)> {
        self.check_state(state)?;
        let g = self.gradient(&state.to_stacked());
        let d = self.feature_dim();
        Ok((g.rows(0, d + 2).into_owned(), g[d + 2]))
    }

    /// Full `(d+3) x (d+3)` Hessian over `[w; u; v; y]`; independent of `state`.
    pub fn hessian_at(&self, state: &PrimalDualState) -> Result<DMatrix<f64>> {
        self.check_state(state)?;
        Ok(self.hessian_matrix().clone())
    }

    fn scores(&self, w: nalgebra::DVectorView<'_, f64>) -> DVector<f64> {
        self.dataset.features() * w
    }

    fn hessian_matrix(&self) -> &DMatrix<f64> {
        self.hessian.get_or_init(|| self.assemble_hessian())
    }

    fn assemble_hessian(&self) -> DMatrix<f64> {
        let a = self.dataset.features();
        let labels = self.dataset.labels();
        let (n, d) = (a.nrows(), a.ncols());
        let inv_n = 1.0 / n as f64;
        let ObjectiveParams { lambda, p } = self.params;
        let q = 1.0 - p;

        let weights =
            DVector::from_iterator(n, labels.iter().map(|l| if l.is_positive() { 2.0 * q } else { 2.0 * p }));
        let pos_coef =
            DVector::from_iterator(n, labels.iter().map(|l| if l.is_positive() { -2.0 * q } else { 0.0 }));
        let neg_coef =
            DVector::from_iterator(n, labels.iter().map(|l| if l.is_positive() { 0.0 } else { -2.0 * p }));
        let y_coef = DVector::from_iterator(
            n,
            labels.iter().map(|l| if l.is_positive() { -2.0 * q } else { 2.0 * p }),
        );

        let mut scaled = a.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= weights[i];
        }
        let mut ww = a.tr_mul(&scaled) * inv_n;
        for i in 0..d {
            ww[(i, i)] += lambda;
        }
        let wu = a.tr_mul(&pos_coef) * inv_n;
        let wv = a.tr_mul(&neg_coef) * inv_n;
        let wy = a.tr_mul(&y_coef) * inv_n;
        let n_pos = self.dataset.n_positive() as f64;
        let n_neg = self.dataset.n_negative() as f64;

        let mut h = DMatrix::zeros(d + 3, d + 3);
        h.view_mut((0, 0), (d, d)).copy_from(&ww);
        for i in 0..d {
            h[(i, d)] = wu[i];
            h[(d, i)] = wu[i];
            h[(i, d + 1)] = wv[i];
            h[(d + 1, i)] = wv[i];
            h[(i, d + 2)] = wy[i];
            h[(d + 2, i)] = wy[i];
        }
        h[(d, d)] = 2.0 * q * n_pos * inv_n + lambda;
        h[(d + 1, d + 1)] = 2.0 * p * n_neg * inv_n + lambda;
        h[(d + 2, d + 2)] = -2.0 * p * q;
        h
    }
}

impl SaddleObjective for AucObjective<'_> {
    fn dim(&self) -> usize {
        self.feature_dim() + 3
    }

    fn min_dim(&self) -> usize {
        self.feature_dim() + 2
    }

    fn value(&self, z: &DVector<f64>) -> f64 {
        let d = self.feature_dim();
        debug_assert_eq!(z.len(), d + 3);
        let (u, v, y) = (z[d], z[d + 1], z[d + 2]);
        let ObjectiveParams { lambda, p } = self.params;
        let q = 1.0 - p;
        let scores = self.scores(z.rows(0, d));
        let mut sum = 0.0;
        for (s, label) in scores.iter().zip(self.dataset.labels()) {
            sum += if label.is_positive() {
                q * ((s - u).powi(2) - 2.0 * (1.0 + y) * s)
            } else {
                p * ((s - v).powi(2) + 2.0 * (1.0 + y) * s)
            };
        }
        let x_norm_sq = z.rows(0, d + 2).norm_squared();
        sum / self.dataset.len() as f64 + 0.5 * lambda * x_norm_sq - p * q * y * y
    }

    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let d = self.feature_dim();
        debug_assert_eq!(z.len(), d + 3);
        let (u, v, y) = (z[d], z[d + 1], z[d + 2]);
        let ObjectiveParams { lambda, p } = self.params;
        let q = 1.0 - p;
        let inv_n = 1.0 / self.dataset.len() as f64;
        let scores = self.scores(z.rows(0, d));

        let mut coef = DVector::zeros(scores.len());
        let (mut gu, mut gv, mut gy) = (0.0, 0.0, 0.0);
        for (i, (s, label)) in scores.iter().zip(self.dataset.labels()).enumerate() {
            if label.is_positive() {
                coef[i] = q * (2.0 * (s - u) - 2.0 * (1.0 + y));
                gu -= 2.0 * q * (s - u);
                gy -= 2.0 * q * s;
            } else {
                coef[i] = p * (2.0 * (s - v) + 2.0 * (1.0 + y));
                gv -= 2.0 * p * (s - v);
                gy += 2.0 * p * s;
            }
        }
        let gw = self.dataset.features().tr_mul(&coef) * inv_n;

        let mut g = DVector::zeros(d + 3);
        for i in 0..d {
            g[i] = gw[i] + lambda * z[i];
        }
        g[d] = gu * inv_n + lambda * u;
        g[d + 1] = gv * inv_n + lambda * v;
        g[d + 2] = gy * inv_n - 2.0 * p * q * y;
        g
    }

    fn hessian(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        self.hessian_matrix().clone()
    }

    fn hessian_vec(&self, _z: &DVector<f64>, dir: &DVector<f64>) -> DVector<f64> {
        let d = self.feature_dim();
        let (du, dv, dy) = (dir[d], dir[d + 1], dir[d + 2]);
        let ObjectiveParams { lambda, p } = self.params;
        let q = 1.0 - p;
        let inv_n = 1.0 / self.dataset.len() as f64;
        let t = self.scores(dir.rows(0, d));

        let mut coef = DVector::zeros(t.len());
        let (mut hu, mut hv, mut hy) = (0.0, 0.0, 0.0);
        for (i, (ti, label)) in t.iter().zip(self.dataset.labels()).enumerate() {
            if label.is_positive() {
                coef[i] = 2.0 * q * (ti - du - dy);
                hu -= 2.0 * q * (ti - du);
                hy -= 2.0 * q * ti;
            } else {
                coef[i] = 2.0 * p * (ti - dv + dy);
                hv -= 2.0 * p * (ti - dv);
                hy += 2.0 * p * ti;
            }
        }
        let hw = self.dataset.features().tr_mul(&coef) * inv_n;
        let mut out = DVector::zeros(d + 3);
        for i in 0..d {
            out[i] = hw[i] + lambda * dir[i];
        }
        out[d] = hu * inv_n + lambda * du;
        out[d + 1] = hv * inv_n + lambda * dv;
        out[d + 2] = hy * inv_n - 2.0 * p * q * dy;
        out
    }

    fn hessian_is_constant(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(neg_feature: f64) -> LabeledDataset {
        LabeledDataset::from_rows(&[vec![1.0], vec![neg_feature]], &[1.0, -1.0]).unwrap()
    }

    fn state(w: f64) -> PrimalDualState {
        PrimalDualState {
            w: vec![w],
            ..PrimalDualState::zeros(1)
        }
    }

    #[test]
    fn zero_weights_give_zero_value() {
        let ds = two_point(0.0);
        let obj = AucObjective::with_lambda(&ds, 0.0).unwrap();
        assert_eq!(obj.value_at(&state(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn hand_substituted_values() {
        let ds = two_point(1.0);
        let obj = AucObjective::with_lambda(&ds, 0.0).unwrap();
        assert!((obj.value_at(&state(1.0)).unwrap() - 0.5).abs() < 1e-15);
        let reg = AucObjective::with_lambda(&ds, 2.0).unwrap();
        assert!((reg.value_at(&state(1.0)).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn dual_gradient_cancels_on_symmetric_pair() {
        let ds = two_point(1.0);
        let obj = AucObjective::with_lambda(&ds, 0.0).unwrap();
        let (_, gy) = obj.gradient_at(&state(1.0)).unwrap();
        assert_eq!(gy, 0.0);
    }

    #[test]
    fn zero_state_has_zero_center_gradients() {
        let ds = LabeledDataset::from_rows(
            &[vec![0.3, -1.0], vec![2.0, 0.5], vec![-0.7, 0.1]],
            &[1.0, -1.0, -1.0],
        )
        .unwrap();
        let obj = AucObjective::with_lambda(&ds, 0.0).unwrap();
        let (gx, _) = obj.gradient_at(&PrimalDualState::zeros(2)).unwrap();
        assert_eq!(gx[2], 0.0);
        assert_eq!(gx[3], 0.0);
    }

    #[test]
    fn dual_curvature_matches_formula() {
        let ds = two_point(0.5);
        let obj = AucObjective::with_lambda(&ds, 0.0).unwrap();
        let h = obj.hessian_at(&state(0.0)).unwrap();
        assert_eq!(h[(3, 3)], -0.5);
    }

    #[test]
    fn hessian_vec_agrees_with_matrix() {
        let ds = LabeledDataset::from_rows(
            &[vec![0.3, -1.0], vec![2.0, 0.5], vec![-0.7, 0.1], vec![1.1, 1.2]],
            &[1.0, -1.0, -1.0, 1.0],
        )
        .unwrap();
        let obj = AucObjective::with_lambda(&ds, 0.01).unwrap();
        let z = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        let dir = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.25, -1.5]);
        let a = obj.hessian_vec(&z, &dir);
        let b = obj.hessian(&z) * &dir;
        assert!((a - b).amax() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let ds = two_point(0.0);
        let obj = AucObjective::with_lambda(&ds, 0.0).unwrap();
        assert!(matches!(
            obj.value_at(&PrimalDualState::zeros(3)),
            Err(Error::DimensionMismatch { expected: 1, actual: 3 })
        ));
    }

    #[test]
    fn mismatched_fraction_rejected() {
        let ds = two_point(0.0);
        let params = ObjectiveParams::new(0.0, 0.25).unwrap();
        assert!(AucObjective::new(&ds, params).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let ds = two_point(1.0);
        let obj = AucObjective::with_lambda(&ds, 0.0).unwrap();
        assert!(matches!(obj.value_at(&state(1e300)), Err(Error::NonFinite(_))));
    }

    #[test]
    fn stacked_round_trip() {
        let s = PrimalDualState {
            w: vec![1.0, 2.0],
            u: 3.0,
            v: 4.0,
            y: 5.0,
        };
        assert_eq!(PrimalDualState::from_stacked(&s.to_stacked()).unwrap(), s);
    }
}
