use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Result};
use crate::{Real, Tensor};

/// Per-dimension affine map of the fitted range onto `[-1, 1]`.
///
/// Dimensions that are constant over the fitted rows map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &Tensor<f64>, rows: &[usize]) -> Result<Self> {
        let d = x.cols();
        if rows.is_empty() {
            return Err(dim_err("MinMaxScaler::fit", "no rows to fit"));
        }
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for &i in rows {
            for (j, &v) in x.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    fn check<F: Real>(&self, x: &Tensor<F>) -> Result<()> {
        if x.cols() != self.dim() {
            return Err(dim_err("MinMaxScaler", format!("{} columns, scaler fit on {}", x.cols(), self.dim())));
        }
        Ok(())
    }

    pub fn transform<F: Real>(&self, x: &Tensor<f64>) -> Result<Tensor<F>> {
        self.check(x)?;
        let d = self.dim();
        let data = x
            .data()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let j = k % d;
                let span = self.max[j] - self.min[j];
                let s = if span > 0.0 { 2.0 * (v - self.min[j]) / span - 1.0 } else { 0.0 };
                F::from_f64(s)
            })
            .collect();
        Tensor::new(x.shape().to_vec(), data)
    }

    pub fn inverse<F: Real>(&self, x: &Tensor<F>) -> Result<Tensor<f64>> {
        self.check(x)?;
        let d = self.dim();
        let data = x
            .data()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let j = k % d;
                let span = self.max[j] - self.min[j];
                if span > 0.0 {
                    (v.as_f64() + 1.0) * 0.5 * span + self.min[j]
                } else {
                    self.min[j]
                }
            })
            .collect();
        Tensor::new(x.shape().to_vec(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_range_to_unit_interval_and_back() {
        let x = Tensor::<f64>::from_rows(&[vec![0.0, 5.0, 2.0], vec![4.0, 7.0, 2.0], vec![2.0, 6.0, 2.0]]).unwrap();
        let s = MinMaxScaler::fit(&x, &[0, 1, 2]).unwrap();
        let y: Tensor<f64> = s.transform(&x).unwrap();
        assert_eq!(y.row(0), &[-1.0, -1.0, 0.0]);
        assert_eq!(y.row(1), &[1.0, 1.0, 0.0]);
        assert_eq!(y.row(2), &[0.0, 0.0, 0.0]);
        let back = s.inverse(&y).unwrap();
        assert_eq!(back, x);
    }
}
