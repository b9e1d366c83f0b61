use serde::{Deserialize, Serialize};

use super::{Real, Tensor};
use crate::error::{dim_err, Result};

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for one ordered parameter list.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Tensor<F>>,
    pub v: Vec<Tensor<F>>,
}

impl<F: Real> AdamState<F> {
    /// Zeroed moments shaped like `params`.
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Tensor<F>>) -> Self {
        let (m, v) = params
            .into_iter()
            .map(|p| (Tensor::zeros(p.shape()), Tensor::zeros(p.shape())))
            .unzip();
        Self {
            config,
            step: 0,
            m,
            v,
        }
    }

    /// One bias-corrected Adam update, applied in place.
    pub fn update(&mut self, params: &mut [&mut Tensor<F>], grads: &[Tensor<F>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(dim_err(
                "adam_step",
                format!(
                    "{} moments, {} params, {} grads",
                    self.m.len(),
                    params.len(),
                    grads.len()
                ),
            ));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(dim_err(
                    "adam_step",
                    format!("param {:?}, grad {:?}, moment {:?}", p.shape(), g.shape(), m.shape()),
                ));
            }
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let b1 = F::from_f64(c.beta1);
        let b2 = F::from_f64(c.beta2);
        let one = F::one();
        let bc1 = F::from_f64(1.0 - c.beta1.powi(t));
        let bc2 = F::from_f64(1.0 - c.beta2.powi(t));
        let lr = F::from_f64(c.lr);
        let eps = F::from_f64(c.eps);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let pd = p.data_mut();
            for (i, &gi) in g.data().iter().enumerate() {
                let mi = &mut m.data_mut()[i];
                *mi = b1 * *mi + (one - b1) * gi;
                let vi = &mut v.data_mut()[i];
                *vi = b2 * *vi + (one - b2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                pd[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.ensure_finite("adam_step")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Tensor::<f64>::from_f64(vec![3], &[1.0, -2.0, 0.5]).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(cfg(0.1), [&p]);
        st.update(&mut [&mut p], &[Tensor::zeros(&[3])]).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m = 0.5, v = 0.1; bias-corrected: m_hat = 1, v_hat = 1, step = 0.1/(1+1e-8).
        let mut p = Tensor::<f64>::scalar(0.0);
        let mut st = AdamState::new(cfg(0.1), [&p]);
        st.update(&mut [&mut p], &[Tensor::scalar(1.0)]).unwrap();
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((p.item().unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn counter_increments_and_shapes_checked() {
        let mut p = Tensor::<f32>::zeros(&[2, 2]);
        let mut st = AdamState::new(cfg(0.01), [&p]);
        for k in 1..=3 {
            st.update(&mut [&mut p], &[Tensor::ones(&[2, 2])]).unwrap();
            assert_eq!(st.step, k);
        }
        assert!(st.update(&mut [&mut p], &[Tensor::ones(&[4])]).is_err());
        assert_eq!(st.step, 3);
    }
}
