use crate::datamodel::MinMaxScaler;
use crate::error::{dim_err, Error, Result};
use crate::ndmath::{gaussian_sample, seeded_rng, Tape};
use crate::networks::{g1_forward, Generator, NetSpec};
use crate::{Real, Tensor};

/// RNG stream reserved for synthesis, apart from the training streams.
pub const SYNTH_STREAM: u64 = 3;

/// Default number of synthesized rows per class.
pub const DEFAULT_BANK_SIZE: usize = 60;

/// Synthesized visual features in the original (unscaled) feature space,
/// `n` consecutive rows per class.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesizedBank {
    pub classes: Vec<usize>,
    pub n: usize,
    pub features: Tensor<f64>,
    pub labels: Vec<usize>,
}

impl SynthesizedBank {
    pub fn rows_of(&self, k: usize) -> std::ops::Range<usize> {
        k * self.n..(k + 1) * self.n
    }
}

/// Draws `n` features per class from G1 with independent noise and maps
/// them back through `scaler`.
pub fn synthesize<F: Real>(
    spec: &NetSpec,
    g1: &Generator<F>,
    scaler: &MinMaxScaler,
    semantic: &Tensor<f64>,
    classes: &[usize],
    n: usize,
    seed: u64,
) -> Result<SynthesizedBank> {
    if n == 0 || classes.is_empty() {
        return Err(Error::Usage("synthesis needs n >= 1 and at least one class".into()));
    }
    if scaler.dim() != spec.d_v {
        return Err(dim_err(
            "synthesize",
            format!("scaler covers {} dims, generator emits {}", scaler.dim(), spec.d_v),
        ));
    }
    let (c, d_s) = semantic.dims2()?;
    if d_s != spec.d_s {
        return Err(dim_err("synthesize", format!("semantic width {d_s}, spec {}", spec.d_s)));
    }
    if let Some(&bad) = classes.iter().find(|&&k| k >= c) {
        return Err(Error::Input(format!("class {bad} out of range for {c} classes")));
    }
    let mut rng = seeded_rng(seed);
    rng.set_stream(SYNTH_STREAM);
    let labels: Vec<usize> = classes.iter().flat_map(|&k| std::iter::repeat_n(k, n)).collect();
    let alpha: Tensor<F> = semantic.select_rows(&labels).cast();
    let z: Tensor<F> = gaussian_sample(&mut rng, &[labels.len(), spec.d_noise]);
    let tape = Tape::new();
    let theta = g1.bind(&tape, false)?;
    let (x_hat, _) = g1_forward(spec, &theta, tape.constant(alpha)?, tape.constant(z)?)?;
    let x_hat = x_hat.value();
    x_hat.ensure_finite("synthesize")?;
    Ok(SynthesizedBank {
        classes: classes.to_vec(),
        n,
        features: scaler.inverse(&x_hat)?,
        labels,
    })
}
