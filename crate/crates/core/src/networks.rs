//! The four MLPs: forward generator G1 (with text encoder), forward
//! discriminator D1, inverse generator G2 and inverse discriminator D2.
//!
//! Parameters live in plain [`Tensor`]s. To run a forward pass they are
//! bound onto a [`Tape`], either as trainable leaves or as constants, which
//! is how the training losses control where gradients flow.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{dim_err, Error, Result};
use crate::ndmath::{seeded_rng, truncated_normal, Rng, Tape, Var};
use crate::{Real, Tensor};

/// Negative slope of every LeakyReLU in the generators.
pub const LEAKY_SLOPE: f64 = 0.2;
/// Standard deviation of the initial weights (truncated at two deviations).
pub const INIT_STD: f64 = 0.02;

/// What the inverse generator reconstructs, and so its output width.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleTarget {
    /// The encoder output `s`.
    #[default]
    TextFeature,
    /// The raw TF-IDF row.
    Tfidf,
}

/// Network dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub d_s: usize,
    pub d_embed: usize,
    pub d_noise: usize,
    pub d_hidden: usize,
    pub d_v: usize,
    pub num_classes: usize,
    pub d_hidden_disc: usize,
    pub attribute_mode: bool,
    pub cycle_target: CycleTarget,
}

impl NetSpec {
    /// Default widths for the given data dimensions.
    pub fn new(d_s: usize, d_v: usize, num_classes: usize) -> Self {
        Self {
            d_s,
            d_embed: d_s.min(1000),
            d_noise: 100,
            d_hidden: 4096,
            d_v,
            num_classes,
            d_hidden_disc: 1024,
            attribute_mode: false,
            cycle_target: CycleTarget::TextFeature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.d_s,
            self.d_embed,
            self.d_noise,
            self.d_hidden,
            self.d_v,
            self.num_classes,
            self.d_hidden_disc,
        ];
        if dims.contains(&0) {
            return Err(Error::Usage(format!("all network dimensions must be >= 1: {self:?}")));
        }
        if self.attribute_mode && self.d_embed != self.d_s {
            return Err(Error::Usage(format!(
                "attribute mode needs d_embed == d_s ({} != {})",
                self.d_embed, self.d_s
            )));
        }
        Ok(())
    }

    /// Width of the inverse generator's output.
    pub fn d_out(&self) -> usize {
        match self.cycle_target {
            CycleTarget::TextFeature => self.d_embed,
            CycleTarget::Tfidf => self.d_s,
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("NetSpec serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Fully connected layer `y = x W + b` with `W: [in x out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<F> {
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
}

impl<F: Real> Linear<F> {
    pub fn init(rng: &mut Rng, d_in: usize, d_out: usize) -> Self {
        Self {
            weight: truncated_normal(rng, &[d_in, d_out], INIT_STD),
            bias: Tensor::zeros(&[d_out]),
        }
    }

    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[d_in, d_out]),
            bias: Tensor::zeros(&[d_out]),
        }
    }

    pub fn bind<'t>(&self, tape: &'t Tape<F>, trainable: bool) -> Result<BoundLinear<'t, F>> {
        Ok(BoundLinear {
            weight: tape.leaf(self.weight.clone(), trainable)?,
            bias: tape.leaf(self.bias.clone(), trainable)?,
        })
    }

    fn tensors(&self) -> [&Tensor<F>; 2] {
        [&self.weight, &self.bias]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor<F>; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

#[derive(Clone, Copy)]
pub struct BoundLinear<'t, F> {
    pub weight: Var<'t, F>,
    pub bias: Var<'t, F>,
}

impl<'t, F: Real> BoundLinear<'t, F> {
    pub fn forward(&self, x: Var<'t, F>) -> Result<Var<'t, F>> {
        let b = x.value().rows();
        x.matmul(self.weight)?.add(self.bias.broadcast_rows(b)?)
    }

    fn vars(&self) -> [Var<'t, F>; 2] {
        [self.weight, self.bias]
    }

    fn detached(&self) -> Result<Self> {
        Ok(Self {
            weight: self.weight.detach()?,
            bias: self.bias.detach()?,
        })
    }

    fn from_pair(vars: &[Var<'t, F>]) -> Self {
        Self {
            weight: vars[0],
            bias: vars[1],
        }
    }
}

/// Ordered access to every parameter tensor of a network.
///
/// The order is fixed and shared by optimizers, bindings and checkpoints.
pub trait ParamSet<F> {
    fn params(&self) -> Vec<&Tensor<F>>;
    fn params_mut(&mut self) -> Vec<&mut Tensor<F>>;
}

/// Generator parameters; the encoder is present only in G1 outside attribute mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator<F> {
    pub encoder: Option<Linear<F>>,
    pub layer1: Linear<F>,
    pub layer2: Linear<F>,
}

impl<F: Real> ParamSet<F> for Generator<F> {
    fn params(&self) -> Vec<&Tensor<F>> {
        let mut out = Vec::with_capacity(6);
        if let Some(e) = &self.encoder {
            out.extend(e.tensors());
        }
        out.extend(self.layer1.tensors());
        out.extend(self.layer2.tensors());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out = Vec::with_capacity(6);
        if let Some(e) = &mut self.encoder {
            out.extend(e.tensors_mut());
        }
        out.extend(self.layer1.tensors_mut());
        out.extend(self.layer2.tensors_mut());
        out
    }
}

impl<F: Real> Generator<F> {
    pub fn bind<'t>(&self, tape: &'t Tape<F>, trainable: bool) -> Result<BoundGenerator<'t, F>> {
        Ok(BoundGenerator {
            encoder: self.encoder.as_ref().map(|e| e.bind(tape, trainable)).transpose()?,
            layer1: self.layer1.bind(tape, trainable)?,
            layer2: self.layer2.bind(tape, trainable)?,
        })
    }
}

#[derive(Clone, Copy)]
pub struct BoundGenerator<'t, F> {
    pub encoder: Option<BoundLinear<'t, F>>,
    pub layer1: BoundLinear<'t, F>,
    pub layer2: BoundLinear<'t, F>,
}

impl<'t, F: Real> BoundGenerator<'t, F> {
    /// Tape handles in [`ParamSet`] order.
    pub fn vars(&self) -> Vec<Var<'t, F>> {
        let mut out = Vec::with_capacity(6);
        if let Some(e) = &self.encoder {
            out.extend(e.vars());
        }
        out.extend(self.layer1.vars());
        out.extend(self.layer2.vars());
        out
    }

    /// Rebuilds from handles in [`ParamSet`] order: 6 with an encoder, 4 without.
    pub fn from_vars(vars: &[Var<'t, F>]) -> Result<Self> {
        let (encoder, rest) = match vars.len() {
            6 => (Some(BoundLinear::from_pair(&vars[..2])), &vars[2..]),
            4 => (None, vars),
            n => return Err(dim_err("BoundGenerator::from_vars", format!("expected 4 or 6 handles, got {n}"))),
        };
        Ok(Self {
            encoder,
            layer1: BoundLinear::from_pair(&rest[..2]),
            layer2: BoundLinear::from_pair(&rest[2..]),
        })
    }

    /// Same values, cut off from gradient flow.
    pub fn detached(&self) -> Result<Self> {
        Ok(Self {
            encoder: self.encoder.as_ref().map(BoundLinear::detached).transpose()?,
            layer1: self.layer1.detached()?,
            layer2: self.layer2.detached()?,
        })
    }

    /// Text embedding `s = LeakyReLU(psi(alpha))`; the identity without an encoder.
    pub fn encode(&self, alpha: Var<'t, F>) -> Result<Var<'t, F>> {
        match &self.encoder {
            Some(e) => e.forward(alpha)?.leaky_relu(F::from_f64(LEAKY_SLOPE)),
            None => Ok(alpha),
        }
    }

    /// Noise-conditioned body: `Tanh(layer2(LeakyReLU(layer1([input, z]))))`.
    pub fn body(&self, input: Var<'t, F>, z: Var<'t, F>) -> Result<Var<'t, F>> {
        let h = self
            .layer1
            .forward(input.concat_cols(z)?)?
            .leaky_relu(F::from_f64(LEAKY_SLOPE))?;
        self.layer2.forward(h)?.tanh()
    }
}

/// Shared trunk with a Wasserstein critic head and a classifier head.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator<F> {
    pub trunk: Linear<F>,
    pub critic: Linear<F>,
    pub classifier: Linear<F>,
}

impl<F: Real> ParamSet<F> for Discriminator<F> {
    fn params(&self) -> Vec<&Tensor<F>> {
        let mut out = Vec::with_capacity(6);
        out.extend(self.trunk.tensors());
        out.extend(self.critic.tensors());
        out.extend(self.classifier.tensors());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out = Vec::with_capacity(6);
        out.extend(self.trunk.tensors_mut());
        out.extend(self.critic.tensors_mut());
        out.extend(self.classifier.tensors_mut());
        out
    }
}

impl<F: Real> Discriminator<F> {
    pub fn bind<'t>(&self, tape: &'t Tape<F>, trainable: bool) -> Result<BoundDiscriminator<'t, F>> {
        Ok(BoundDiscriminator {
            trunk: self.trunk.bind(tape, trainable)?,
            critic: self.critic.bind(tape, trainable)?,
            classifier: self.classifier.bind(tape, trainable)?,
        })
    }

    /// Clamps every weight and bias into `[-c, c]`.
    pub fn clip(&mut self, c: F) {
        for t in self.params_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = v.max(-c).min(c));
        }
    }
}

#[derive(Clone, Copy)]
pub struct BoundDiscriminator<'t, F> {
    pub trunk: BoundLinear<'t, F>,
    pub critic: BoundLinear<'t, F>,
    pub classifier: BoundLinear<'t, F>,
}

impl<'t, F: Real> BoundDiscriminator<'t, F> {
    pub fn vars(&self) -> Vec<Var<'t, F>> {
        let mut out = Vec::with_capacity(6);
        out.extend(self.trunk.vars());
        out.extend(self.critic.vars());
        out.extend(self.classifier.vars());
        out
    }

    pub fn from_vars(vars: &[Var<'t, F>]) -> Result<Self> {
        if vars.len() != 6 {
            return Err(dim_err(
                "BoundDiscriminator::from_vars",
                format!("expected 6 handles, got {}", vars.len()),
            ));
        }
        Ok(Self {
            trunk: BoundLinear::from_pair(&vars[..2]),
            critic: BoundLinear::from_pair(&vars[2..4]),
            classifier: BoundLinear::from_pair(&vars[4..]),
        })
    }

    pub fn detached(&self) -> Result<Self> {
        Ok(Self {
            trunk: self.trunk.detached()?,
            critic: self.critic.detached()?,
            classifier: self.classifier.detached()?,
        })
    }
}

/// All four networks: `g1` (theta), `d1` (w), `g2` (delta), `d2` (zeta).
#[derive(Clone, Debug, PartialEq)]
pub struct Networks<F> {
    pub g1: Generator<F>,
    pub d1: Discriminator<F>,
    pub g2: Generator<F>,
    pub d2: Discriminator<F>,
}

/// Draws all parameters from one seeded stream, in the order g1, d1, g2, d2.
///
/// The forward pair is drawn first, so its values do not depend on the
/// shape of the inverse pair.
pub fn init_networks<F: Real>(spec: &NetSpec, seed: u64) -> Result<Networks<F>> {
    spec.validate()?;
    let mut rng = seeded_rng(seed);
    let rng = &mut rng;
    let encoder = (!spec.attribute_mode).then(|| Linear::init(rng, spec.d_s, spec.d_embed));
    let g1 = Generator {
        encoder,
        layer1: Linear::init(rng, spec.d_embed + spec.d_noise, spec.d_hidden),
        layer2: Linear::init(rng, spec.d_hidden, spec.d_v),
    };
    let d1 = init_disc(rng, spec.d_v, spec);
    let g2 = Generator {
        encoder: None,
        layer1: Linear::init(rng, spec.d_v + spec.d_noise, spec.d_hidden),
        layer2: Linear::init(rng, spec.d_hidden, spec.d_out()),
    };
    let d2 = init_disc(rng, spec.d_out(), spec);
    Ok(Networks { g1, d1, g2, d2 })
}

fn init_disc<F: Real>(rng: &mut Rng, d_in: usize, spec: &NetSpec) -> Discriminator<F> {
    Discriminator {
        trunk: Linear::init(rng, d_in, spec.d_hidden_disc),
        critic: Linear::init(rng, spec.d_hidden_disc, 1),
        classifier: Linear::init(rng, spec.d_hidden_disc, spec.num_classes),
    }
}

impl<F: Real> Networks<F> {
    /// Checks every parameter shape against `spec`.
    pub fn check(&self, spec: &NetSpec) -> Result<()> {
        let expected: Networks<F> = zero_networks(spec);
        let pairs = [
            (self.g1.params(), expected.g1.params(), "g1"),
            (self.d1.params(), expected.d1.params(), "d1"),
            (self.g2.params(), expected.g2.params(), "g2"),
            (self.d2.params(), expected.d2.params(), "d2"),
        ];
        for (got, want, name) in pairs {
            if got.len() != want.len() || got.iter().zip(&want).any(|(g, w)| g.shape() != w.shape()) {
                return Err(dim_err("networks", format!("{name} parameters do not match the NetSpec")));
            }
            for t in got {
                t.ensure_finite("networks")?;
            }
        }
        Ok(())
    }

    /// All tensors in g1, d1, g2, d2 order.
    pub fn all_params(&self) -> Vec<&Tensor<F>> {
        let mut out = self.g1.params();
        out.extend(self.d1.params());
        out.extend(self.g2.params());
        out.extend(self.d2.params());
        out
    }

    pub fn all_params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out = self.g1.params_mut();
        out.extend(self.d1.params_mut());
        out.extend(self.g2.params_mut());
        out.extend(self.d2.params_mut());
        out
    }
}

/// Networks of the right shapes with every parameter zero.
pub fn zero_networks<F: Real>(spec: &NetSpec) -> Networks<F> {
    let disc = |d_in: usize| Discriminator {
        trunk: Linear::zeros(d_in, spec.d_hidden_disc),
        critic: Linear::zeros(spec.d_hidden_disc, 1),
        classifier: Linear::zeros(spec.d_hidden_disc, spec.num_classes),
    };
    Networks {
        g1: Generator {
            encoder: (!spec.attribute_mode).then(|| Linear::zeros(spec.d_s, spec.d_embed)),
            layer1: Linear::zeros(spec.d_embed + spec.d_noise, spec.d_hidden),
            layer2: Linear::zeros(spec.d_hidden, spec.d_v),
        },
        d1: disc(spec.d_v),
        g2: Generator {
            encoder: None,
            layer1: Linear::zeros(spec.d_v + spec.d_noise, spec.d_hidden),
            layer2: Linear::zeros(spec.d_hidden, spec.d_out()),
        },
        d2: disc(spec.d_out()),
    }
}

fn check_cols<F: Real>(v: Var<'_, F>, cols: usize, what: &str) -> Result<()> {
    let shape = v.shape();
    if shape.len() != 2 || shape[1] != cols {
        return Err(dim_err("forward", format!("{what} must be [b x {cols}], got {shape:?}")));
    }
    Ok(())
}

/// G1: returns the fake visual features `x_hat` and the text embedding `s`.
pub fn g1_forward<'t, F: Real>(
    spec: &NetSpec,
    theta: &BoundGenerator<'t, F>,
    alpha: Var<'t, F>,
    z: Var<'t, F>,
) -> Result<(Var<'t, F>, Var<'t, F>)> {
    check_cols(alpha, spec.d_s, "alpha")?;
    check_cols(z, spec.d_noise, "z")?;
    let s = theta.encode(alpha)?;
    let x_hat = theta.body(s, z)?;
    Ok((x_hat, s))
}

/// G2: reconstructs text features from visual features and noise.
pub fn g2_forward<'t, F: Real>(
    spec: &NetSpec,
    delta: &BoundGenerator<'t, F>,
    x: Var<'t, F>,
    z: Var<'t, F>,
) -> Result<Var<'t, F>> {
    check_cols(x, spec.d_v, "x")?;
    check_cols(z, spec.d_noise, "z")?;
    delta.body(x, z)
}

/// Shared discriminator pass: critic scores `[b]` and class logits `[b x C]`.
pub fn disc_forward<'t, F: Real>(
    disc: &BoundDiscriminator<'t, F>,
    x: Var<'t, F>,
) -> Result<(Var<'t, F>, Var<'t, F>)> {
    let h = disc.trunk.forward(x)?.relu()?;
    let b = x.value().rows();
    let critic = disc.critic.forward(h)?.reshape(&[b])?;
    let logits = disc.classifier.forward(h)?;
    Ok((critic, logits))
}

pub fn d1_forward<'t, F: Real>(
    spec: &NetSpec,
    w: &BoundDiscriminator<'t, F>,
    x: Var<'t, F>,
) -> Result<(Var<'t, F>, Var<'t, F>)> {
    check_cols(x, spec.d_v, "x")?;
    disc_forward(w, x)
}

pub fn d2_forward<'t, F: Real>(
    spec: &NetSpec,
    zeta: &BoundDiscriminator<'t, F>,
    t: Var<'t, F>,
) -> Result<(Var<'t, F>, Var<'t, F>)> {
    check_cols(t, spec.d_out(), "t")?;
    disc_forward(zeta, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::gaussian_sample;

    fn spec() -> NetSpec {
        NetSpec {
            d_s: 7,
            d_embed: 5,
            d_noise: 3,
            d_hidden: 6,
            d_v: 4,
            num_classes: 3,
            d_hidden_disc: 5,
            attribute_mode: false,
            cycle_target: CycleTarget::TextFeature,
        }
    }

    #[test]
    fn init_is_seeded_and_truncated() {
        let a: Networks<f64> = init_networks(&spec(), 3).unwrap();
        let b: Networks<f64> = init_networks(&spec(), 3).unwrap();
        let c: Networks<f64> = init_networks(&spec(), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.g1.layer1.weight, c.g1.layer1.weight);
        for t in a.all_params() {
            assert!(t.data().iter().all(|v| v.abs() <= 0.04));
        }
        assert!(a.g1.layer1.bias.data().iter().all(|&v| v == 0.0));
        a.check(&spec()).unwrap();
    }

    #[test]
    fn forward_pair_init_ignores_inverse_shapes() {
        let mut other = spec();
        other.cycle_target = CycleTarget::Tfidf;
        let a: Networks<f64> = init_networks(&spec(), 9).unwrap();
        let b: Networks<f64> = init_networks(&other, 9).unwrap();
        assert_eq!(a.g1, b.g1);
        assert_eq!(a.d1, b.d1);
        assert_eq!(b.g2.layer2.weight.shape(), &[6, 7]);
    }

    #[test]
    fn generator_outputs_are_bounded_and_shaped() {
        let s = spec();
        let nets: Networks<f64> = init_networks(&s, 1).unwrap();
        let tape = Tape::new();
        let theta = nets.g1.bind(&tape, false).unwrap();
        let delta = nets.g2.bind(&tape, false).unwrap();
        let mut rng = seeded_rng(0);
        let alpha = tape.constant(gaussian_sample(&mut rng, &[2, 7]).map(|v| v * 50.0)).unwrap();
        let z = tape.constant(gaussian_sample(&mut rng, &[2, 3])).unwrap();
        let (x, e) = g1_forward(&s, &theta, alpha, z).unwrap();
        assert_eq!(x.shape(), vec![2, 4]);
        assert_eq!(e.shape(), vec![2, 5]);
        assert!(x.value().data().iter().all(|v| v.abs() < 1.0));
        let t = g2_forward(&s, &delta, x, z).unwrap();
        assert_eq!(t.shape(), vec![2, 5]);
        assert!(t.value().data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn zero_inputs_and_biases_give_zero_output() {
        let s = spec();
        let nets: Networks<f64> = init_networks(&s, 2).unwrap();
        let tape = Tape::new();
        let theta = nets.g1.bind(&tape, false).unwrap();
        let alpha = tape.constant(Tensor::zeros(&[3, 7])).unwrap();
        let z = tape.constant(Tensor::zeros(&[3, 3])).unwrap();
        let (x, _) = g1_forward(&s, &theta, alpha, z).unwrap();
        assert!(x.value().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embedding_matches_encoder_alone() {
        let s = spec();
        let nets: Networks<f64> = init_networks(&s, 5).unwrap();
        let tape = Tape::new();
        let theta = nets.g1.bind(&tape, false).unwrap();
        let a = gaussian_sample(&mut seeded_rng(1), &[2, 7]);
        let alpha = tape.constant(a.clone()).unwrap();
        let z = tape.constant(Tensor::zeros(&[2, 3])).unwrap();
        let (_, emb) = g1_forward(&s, &theta, alpha, z).unwrap();
        let tape2 = Tape::new();
        let enc = nets.g1.encoder.as_ref().unwrap().bind(&tape2, false).unwrap();
        let alone = enc
            .forward(tape2.constant(a).unwrap())
            .unwrap()
            .leaky_relu(LEAKY_SLOPE)
            .unwrap();
        assert_eq!(*emb.value(), *alone.value());
    }

    #[test]
    fn attribute_mode_has_no_encoder() {
        let mut s = spec();
        s.attribute_mode = true;
        assert!(s.validate().is_err());
        s.d_embed = 7;
        let nets: Networks<f64> = init_networks(&s, 5).unwrap();
        assert!(nets.g1.encoder.is_none());
        assert_eq!(nets.g1.layer1.weight.shape(), &[10, 6]);
    }

    #[test]
    fn discriminator_shapes_and_zero_weights() {
        let s = spec();
        let z: Networks<f64> = zero_networks(&s);
        let tape = Tape::new();
        let w = z.d1.bind(&tape, false).unwrap();
        let x = tape.constant(gaussian_sample(&mut seeded_rng(3), &[4, 4])).unwrap();
        let (critic, logits) = d1_forward(&s, &w, x).unwrap();
        assert_eq!(critic.shape(), vec![4]);
        assert_eq!(logits.shape(), vec![4, 3]);
        assert!(critic.value().data().iter().all(|&v| v == 0.0));
        let p = logits.softmax().unwrap().value();
        assert!(p.data().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn doubling_a_linear_critic_scales_output_by_four() {
        let s = NetSpec {
            d_v: 2,
            d_hidden_disc: 1,
            num_classes: 2,
            ..spec()
        };
        let mut d: Networks<f64> = zero_networks(&s);
        d.d1.trunk.weight = Tensor::from_rows(&[vec![0.5], vec![1.5]]).unwrap();
        d.d1.critic.weight = Tensor::from_rows(&[vec![2.0]]).unwrap();
        let x = Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let eval = |disc: &Discriminator<f64>| {
            let tape = Tape::new();
            let b = disc.bind(&tape, false).unwrap();
            let (c, _) = d1_forward(&s, &b, tape.constant(x.clone()).unwrap()).unwrap();
            c.value().data()[0]
        };
        let base = eval(&d.d1);
        // Hand evaluation: relu(1*0.5 + 2*1.5) * 2 = 7.
        assert_eq!(base, 7.0);
        let mut doubled = d.d1.clone();
        doubled.trunk.weight = doubled.trunk.weight.map(|v| 2.0 * v);
        doubled.critic.weight = doubled.critic.weight.map(|v| 2.0 * v);
        assert_eq!(eval(&doubled), 4.0 * base);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let s = spec();
        let nets: Networks<f64> = init_networks(&s, 1).unwrap();
        let tape = Tape::new();
        let theta = nets.g1.bind(&tape, false).unwrap();
        let alpha = tape.constant(Tensor::zeros(&[2, 6])).unwrap();
        let z = tape.constant(Tensor::zeros(&[2, 3])).unwrap();
        assert!(matches!(g1_forward(&s, &theta, alpha, z), Err(Error::Dimension { .. })));
    }

    #[test]
    fn clipping_bounds_every_parameter() {
        let mut nets: Networks<f64> = init_networks(&spec(), 1).unwrap();
        nets.d1.trunk.weight.data_mut()[0] = 3.0;
        nets.d1.critic.bias.data_mut()[0] = -3.0;
        nets.d1.clip(0.01);
        assert!(nets.d1.params().iter().all(|t| t.max_abs() <= 0.01));
    }

    #[test]
    fn spec_hash_tracks_fields() {
        let a = spec();
        let mut b = spec();
        assert_eq!(a.hash(), b.hash());
        b.d_hidden += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
