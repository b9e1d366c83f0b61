//! Ridge regression from class semantics to visual features, used as a
//! non-generative baseline: each unseen class is represented by its
//! predicted prototype and test samples go to the nearest prototype.

use nalgebra::{DMatrix, DVector};

use super::knn::knn_classify;
use crate::error::{dim_err, Error, Result};
use crate::Tensor;

/// Candidate penalties tried by [`RidgeModel::fit_cv`].
pub const RIDGE_LAMBDAS: [f64; 7] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

/// Affine map `x ≈ alpha·W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeModel {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub lambda: f64,
}

fn to_matrix(t: &Tensor<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(t.rows(), t.cols(), t.data())
}

impl RidgeModel {
    /// Fits on paired rows `alpha[i]`, `x[i]` with an unpenalized intercept.
    pub fn fit(alpha: &Tensor<f64>, x: &Tensor<f64>, lambda: f64) -> Result<Self> {
        let (n, d_s) = alpha.dims2()?;
        if x.rows() != n || n == 0 {
            return Err(dim_err("ridge", format!("{n} semantic rows, {} visual rows", x.rows())));
        }
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::Usage(format!("ridge penalty {lambda} must be positive")));
        }
        let a = to_matrix(alpha);
        let v = to_matrix(x);
        let a_mean = a.row_mean();
        let v_mean = v.row_mean();
        let mut ac = a.clone();
        let mut vc = v.clone();
        for mut r in ac.row_iter_mut() {
            r -= &a_mean;
        }
        for mut r in vc.row_iter_mut() {
            r -= &v_mean;
        }
        let mut gram = ac.transpose() * &ac;
        for i in 0..d_s {
            gram[(i, i)] += lambda;
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Input("ridge system is not positive definite".into()))?;
        let weight = chol.solve(&(ac.transpose() * vc));
        let bias = (v_mean - a_mean * &weight).transpose();
        Ok(Self { weight, bias, lambda })
    }

    /// Picks the penalty from [`RIDGE_LAMBDAS`] with the lowest squared
    /// error on held-out class prototypes, leaving out one class at a time,
    /// then refits on all rows.
    pub fn fit_cv(alpha: &Tensor<f64>, x: &Tensor<f64>, labels: &[usize]) -> Result<Self> {
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Self::fit(alpha, x, 1.0);
        }
        let mut best = (f64::INFINITY, RIDGE_LAMBDAS[0]);
        for &lambda in &RIDGE_LAMBDAS {
            let mut err = 0.0;
            for &held in &classes {
                let (fit_rows, test_rows): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i] != held);
                let m = Self::fit(&alpha.select_rows(&fit_rows), &x.select_rows(&fit_rows), lambda)?;
                let pred = m.predict(&alpha.select_rows(&test_rows[..1]))?;
                let truth = x.select_rows(&test_rows);
                let mean: Vec<f64> = (0..truth.cols())
                    .map(|j| (0..truth.rows()).map(|i| truth.get(i, j)).sum::<f64>() / truth.rows() as f64)
                    .collect();
                err += pred.row(0).iter().zip(&mean).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
            }
            if err < best.0 {
                best = (err, lambda);
            }
        }
        Self::fit(alpha, x, best.1)
    }

    pub fn predict(&self, alpha: &Tensor<f64>) -> Result<Tensor<f64>> {
        let a = to_matrix(alpha);
        if a.ncols() != self.weight.nrows() {
            return Err(dim_err(
                "ridge predict",
                format!("{} semantic columns, model expects {}", a.ncols(), self.weight.nrows()),
            ));
        }
        let mut out = a * &self.weight;
        for mut r in out.row_iter_mut() {
            r += self.bias.transpose();
        }
        let data: Vec<f64> = out.transpose().iter().copied().collect();
        Tensor::new(vec![out.nrows(), out.ncols()], data)
    }
}

/// Unseen top-1 of the ridge baseline: fit on `train_rows` (seen classes),
/// classify `test_rows` against the predicted prototypes of `unseen`.
pub fn ridge_top1(
    visual: &Tensor<f64>,
    semantic: &Tensor<f64>,
    labels: &[usize],
    train_rows: &[usize],
    test_rows: &[usize],
    unseen: &[usize],
) -> Result<f64> {
    let train_labels: Vec<usize> = train_rows.iter().map(|&i| labels[i]).collect();
    let model = RidgeModel::fit_cv(&semantic.select_rows(&train_labels), &visual.select_rows(train_rows), &train_labels)?;
    let protos = model.predict(&semantic.select_rows(unseen))?;
    let pred = knn_classify(&protos, unseen, &visual.select_rows(test_rows), 1)?;
    let truth: Vec<usize> = test_rows.iter().map(|&i| labels[i]).collect();
    super::top1(&pred, &truth)
}
