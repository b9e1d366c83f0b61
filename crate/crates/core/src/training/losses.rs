//! Loss terms of the four networks.
//!
//! Every loss takes its random inputs explicitly (noise and interpolation
//! weights in [`Draws`]), so it is a pure function of parameters and data.
//! Each loss detaches the networks it must not update; callers may bind all
//! parameters as trainable and still get the documented gradient isolation.

use crate::datamodel::ClassStats;
use crate::error::{Error, Result};
use crate::ndmath::{grad_norm, interpolate_with, Tape, Var};
use crate::networks::{
    d1_forward, d2_forward, disc_forward, g1_forward, g2_forward, BoundDiscriminator, BoundGenerator, CycleTarget,
    NetSpec,
};
use crate::{Real, Tensor};

use super::{Batch, Draws};

/// Coefficients and switches shared by all losses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    /// Zero disables the gradient penalty entirely.
    pub gp_coeff: f64,
    pub pivot_coeff: f64,
    pub cls_inverse_coeff: f64,
    pub cyc_coeff: f64,
    pub half_on_fake_only: bool,
    pub inverse_adversarial: bool,
    pub inverse_classification: bool,
    pub cycle_target: CycleTarget,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            gp_coeff: 10.0,
            pivot_coeff: 1.0,
            cls_inverse_coeff: 12.0,
            cyc_coeff: 10.0,
            half_on_fake_only: false,
            inverse_adversarial: true,
            inverse_classification: true,
            cycle_target: CycleTarget::TextFeature,
        }
    }
}

impl LossConfig {
    /// Whether the inverse discriminator has any term to train on.
    pub fn d2_active(&self) -> bool {
        self.inverse_adversarial || self.inverse_classification
    }
}

fn c<F: Real>(v: f64) -> F {
    F::from_f64(v)
}

fn total<'t, F: Real>(terms: Vec<Var<'t, F>>) -> Result<Var<'t, F>> {
    let mut it = terms.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::Usage("loss has no active terms".into()))?;
    it.try_fold(first, |acc, t| acc.add(t))
}

/// `1/2 (CE_fake + CE_real)`, or `1/2 CE_fake + CE_real` with `half_on_fake_only`.
fn paired_ce<'t, F: Real>(cfg: &LossConfig, fake: Var<'t, F>, real: Var<'t, F>) -> Result<Var<'t, F>> {
    if cfg.half_on_fake_only {
        fake.scale(c(0.5))?.add(real)
    } else {
        fake.add(real)?.scale(c(0.5))
    }
}

/// Mean of `(||grad_x D(x~)|| - 1)^2` at `x~ = eps * real + (1 - eps) * fake`.
///
/// The input gradient is kept on the tape, so the penalty can be
/// differentiated with respect to the critic parameters.
pub fn gradient_penalty<'t, F: Real>(
    disc: &BoundDiscriminator<'t, F>,
    real: &Tensor<F>,
    fake: &Tensor<F>,
    eps: &[F],
) -> Result<Var<'t, F>> {
    let tape: &'t Tape<F> = disc.trunk.weight.tape();
    let x_tilde = tape.param(interpolate_with(real, fake, eps)?)?;
    let (critic, _) = disc_forward(disc, x_tilde)?;
    let g = tape.grad(critic.sum()?, &[x_tilde], true)?[0];
    grad_norm(g)?.add_scalar(c(-1.0))?.square()?.mean()
}

/// Mean over classes present in the batch of `||mean(x_hat of c) - centre(c)||^2`.
pub fn visual_pivot<'t, F: Real>(x_hat: Var<'t, F>, labels: &[usize], stats: &ClassStats<F>) -> Result<Var<'t, F>> {
    let b = labels.len();
    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    let k = present.len();
    let d = x_hat.value().cols();
    let mut avg = Tensor::zeros(&[k, b]);
    let mut centres = Tensor::zeros(&[k, d]);
    for (r, &class) in present.iter().enumerate() {
        let centre = stats
            .mean_of(class)
            .ok_or_else(|| Error::Input(format!("no class statistics for class {class}")))?;
        centres.row_mut(r).copy_from_slice(centre);
        let members: Vec<usize> = (0..b).filter(|&i| labels[i] == class).collect();
        let w = F::one() / c(members.len() as f64);
        for i in members {
            avg.row_mut(r)[i] = w;
        }
    }
    let tape = x_hat.tape();
    let diff = tape.constant(avg)?.matmul(x_hat)?.sub(tape.constant(centres)?)?;
    diff.square()?.sum()?.scale(F::one() / c(k as f64))
}

fn bind_batch<'t, F: Real>(tape: &'t Tape<F>, batch: &Batch<F>) -> Result<(Var<'t, F>, Var<'t, F>)> {
    Ok((tape.constant(batch.alpha.clone())?, tape.constant(batch.x.clone())?))
}

/// Forward discriminator loss; gradients reach `w` only.
pub fn loss_d1<'t, F: Real>(
    cfg: &LossConfig,
    spec: &NetSpec,
    theta: &BoundGenerator<'t, F>,
    w: &BoundDiscriminator<'t, F>,
    batch: &Batch<F>,
    draws: &Draws<F>,
) -> Result<Var<'t, F>> {
    let tape = w.trunk.weight.tape();
    let (alpha, x) = bind_batch(tape, batch)?;
    let z = tape.constant(draws.z.clone())?;
    let (x_hat, _) = g1_forward(spec, &theta.detached()?, alpha, z)?;
    let x_hat = x_hat.detach()?;
    let (c_fake, l_fake) = d1_forward(spec, w, x_hat)?;
    let (c_real, l_real) = d1_forward(spec, w, x)?;
    let ce = paired_ce(
        cfg,
        l_fake.softmax_cross_entropy(&batch.labels)?,
        l_real.softmax_cross_entropy(&batch.labels)?,
    )?;
    let mut terms = vec![ce, c_fake.mean()?, c_real.mean()?.neg()?];
    if cfg.gp_coeff > 0.0 {
        let gp = gradient_penalty(w, &batch.x, &x_hat.value(), &draws.eps)?;
        terms.push(gp.scale(c(cfg.gp_coeff))?);
    }
    total(terms)
}

/// Forward generator loss and its unweighted pivot term.
pub struct G1Loss<'t, F> {
    pub total: Var<'t, F>,
    pub pivot: Var<'t, F>,
}

/// Forward generator loss; gradients reach `theta` only.
pub fn loss_g1<'t, F: Real>(
    cfg: &LossConfig,
    spec: &NetSpec,
    theta: &BoundGenerator<'t, F>,
    w: &BoundDiscriminator<'t, F>,
    batch: &Batch<F>,
    z: &Tensor<F>,
    stats: &ClassStats<F>,
) -> Result<G1Loss<'t, F>> {
    let tape = theta.layer1.weight.tape();
    let alpha = tape.constant(batch.alpha.clone())?;
    let (x_hat, _) = g1_forward(spec, theta, alpha, tape.constant(z.clone())?)?;
    let (critic, logits) = d1_forward(spec, &w.detached()?, x_hat)?;
    let pivot = visual_pivot(x_hat, &batch.labels, stats)?;
    let total = critic
        .mean()?
        .neg()?
        .add(logits.softmax_cross_entropy(&batch.labels)?)?
        .add(pivot.scale(c(cfg.pivot_coeff))?)?;
    Ok(G1Loss { total, pivot })
}

/// Real text samples for the inverse discriminator: `s` or the raw rows.
fn text_target<'t, F: Real>(cfg: &LossConfig, alpha: Var<'t, F>, s: Var<'t, F>) -> Var<'t, F> {
    match cfg.cycle_target {
        CycleTarget::TextFeature => s,
        CycleTarget::Tfidf => alpha,
    }
}

/// Inverse discriminator loss; gradients reach `zeta` only.
///
/// Fake text features are `G2(G1(alpha, z), z2)`.
pub fn loss_d2<'t, F: Real>(
    cfg: &LossConfig,
    spec: &NetSpec,
    theta: &BoundGenerator<'t, F>,
    delta: &BoundGenerator<'t, F>,
    zeta: &BoundDiscriminator<'t, F>,
    batch: &Batch<F>,
    draws: &Draws<F>,
) -> Result<Var<'t, F>> {
    if !cfg.d2_active() {
        return Err(Error::Usage("inverse discriminator has no active terms".into()));
    }
    let tape = zeta.trunk.weight.tape();
    let alpha = tape.constant(batch.alpha.clone())?;
    let z = tape.constant(draws.z.clone())?;
    let z2 = tape.constant(draws.z2.clone())?;
    let (x_hat, s) = g1_forward(spec, &theta.detached()?, alpha, z)?;
    let fake = g2_forward(spec, &delta.detached()?, x_hat, z2)?.detach()?;
    let real = text_target(cfg, alpha, s).detach()?;
    let (c_fake, l_fake) = d2_forward(spec, zeta, fake)?;
    let (c_real, l_real) = d2_forward(spec, zeta, real)?;
    let mut terms = Vec::new();
    if cfg.inverse_classification {
        let ce = paired_ce(
            cfg,
            l_fake.softmax_cross_entropy(&batch.labels)?,
            l_real.softmax_cross_entropy(&batch.labels)?,
        )?;
        terms.push(ce.scale(c(cfg.cls_inverse_coeff))?);
    }
    if cfg.inverse_adversarial {
        terms.push(c_fake.mean()?);
        terms.push(c_real.mean()?.neg()?);
        if cfg.gp_coeff > 0.0 {
            let gp = gradient_penalty(zeta, &real.value(), &fake.value(), &draws.eps)?;
            terms.push(gp.scale(c(cfg.gp_coeff))?);
        }
    }
    total(terms)
}

/// Inverse generator loss; gradients reach `delta` only.
pub fn loss_g2<'t, F: Real>(
    cfg: &LossConfig,
    spec: &NetSpec,
    theta: &BoundGenerator<'t, F>,
    delta: &BoundGenerator<'t, F>,
    zeta: &BoundDiscriminator<'t, F>,
    batch: &Batch<F>,
    draws: &Draws<F>,
) -> Result<Var<'t, F>> {
    let tape = delta.layer1.weight.tape();
    let alpha = tape.constant(batch.alpha.clone())?;
    let z = tape.constant(draws.z.clone())?;
    let z2 = tape.constant(draws.z2.clone())?;
    let (x_hat, _) = g1_forward(spec, &theta.detached()?, alpha, z)?;
    let fake = g2_forward(spec, delta, x_hat.detach()?, z2)?;
    let (critic, logits) = d2_forward(spec, &zeta.detached()?, fake)?;
    let mut terms = Vec::new();
    if cfg.inverse_adversarial {
        terms.push(critic.mean()?.neg()?);
    }
    if cfg.inverse_classification {
        terms.push(logits.softmax_cross_entropy(&batch.labels)?.scale(c(cfg.cls_inverse_coeff))?);
    }
    total(terms)
}

/// `lambda / b * sum ||G2(G1(alpha, z), z2) - target||^2`; gradients reach both generators.
///
/// In text-feature mode the target `s` is not detached, so the encoder also
/// receives gradient through the target side.
pub fn cycle_loss<'t, F: Real>(
    cfg: &LossConfig,
    spec: &NetSpec,
    theta: &BoundGenerator<'t, F>,
    delta: &BoundGenerator<'t, F>,
    batch: &Batch<F>,
    draws: &Draws<F>,
) -> Result<Var<'t, F>> {
    let tape = theta.layer1.weight.tape();
    let alpha = tape.constant(batch.alpha.clone())?;
    let z = tape.constant(draws.z.clone())?;
    let z2 = tape.constant(draws.z2.clone())?;
    let (x_hat, s) = g1_forward(spec, theta, alpha, z)?;
    let rec = g2_forward(spec, delta, x_hat, z2)?;
    let target = text_target(cfg, alpha, s);
    let b = batch.len() as f64;
    rec.sub(target)?.square()?.sum()?.scale(c(cfg.cyc_coeff / b))
}
