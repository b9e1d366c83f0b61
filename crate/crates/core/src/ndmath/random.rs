use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use super::{Real, Tensor};
use crate::error::{dim_err, Result};

/// Seeded generator used everywhere randomness is drawn.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// i.i.d. standard normal values.
pub fn gaussian_sample<F: Real>(rng: &mut Rng, shape: &[usize]) -> Tensor<F> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| F::from_f64(StandardNormal.sample(rng)))
        .collect();
    Tensor::new(shape.to_vec(), data).expect("length matches shape")
}

/// Normal(0, std^2) draws resampled until they fall within two standard deviations.
pub fn truncated_normal<F: Real>(rng: &mut Rng, shape: &[usize], std: f64) -> Tensor<F> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| loop {
            let v: f64 = StandardNormal.sample(rng);
            if v.abs() <= 2.0 {
                break F::from_f64(v * std);
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("length matches shape")
}

/// Per-row points `eps * real + (1 - eps) * fake` with `eps ~ U(0, 1)`.
pub fn interpolate<F: Real>(real: &Tensor<F>, fake: &Tensor<F>, rng: &mut Rng) -> Result<Tensor<F>> {
    let eps: Vec<F> = (0..real.rows()).map(|_| F::from_f64(rng.random::<f64>())).collect();
    interpolate_with(real, fake, &eps)
}

/// [`interpolate`] with explicit per-row mixing weights.
pub fn interpolate_with<F: Real>(real: &Tensor<F>, fake: &Tensor<F>, eps: &[F]) -> Result<Tensor<F>> {
    if real.shape() != fake.shape() {
        return Err(dim_err(
            "interpolate",
            format!("{:?} vs {:?}", real.shape(), fake.shape()),
        ));
    }
    if eps.len() != real.rows() {
        return Err(dim_err("interpolate", format!("{} weights for {} rows", eps.len(), real.rows())));
    }
    let mut out = fake.clone();
    for (i, &e) in eps.iter().enumerate() {
        for (o, &r) in out.row_mut(i).iter_mut().zip(real.row(i)) {
            *o = e * r + (F::one() - e) * *o;
        }
    }
    Ok(out)
}
