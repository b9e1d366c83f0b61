//! Plain-loop re-implementation of the networks and loss terms.
//!
//! Nothing here touches the tape; every term is written out directly from
//! its definition so it can serve as an independent reference.

#![allow(dead_code)]

use cyclezsl_core::datamodel::ClassStats;
use cyclezsl_core::networks::{Discriminator, Generator, Linear, LEAKY_SLOPE};
use cyclezsl_core::Tensor;

pub type Rows = Vec<Vec<f64>>;

pub fn rows(t: &Tensor<f64>) -> Rows {
    (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
}

pub fn linear(x: &Rows, l: &Linear<f64>) -> Rows {
    let (d_in, d_out) = (l.weight.shape()[0], l.weight.shape()[1]);
    x.iter()
        .map(|r| {
            (0..d_out)
                .map(|j| l.bias.data()[j] + (0..d_in).map(|i| r[i] * l.weight.get(i, j)).sum::<f64>())
                .collect()
        })
        .collect()
}

fn apply(x: Rows, f: impl Fn(f64) -> f64) -> Rows {
    x.into_iter().map(|r| r.into_iter().map(&f).collect()).collect()
}

fn leaky(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

fn concat(a: &Rows, b: &Rows) -> Rows {
    a.iter().zip(b).map(|(x, y)| x.iter().chain(y).copied().collect()).collect()
}

pub fn encode(g: &Generator<f64>, alpha: &Rows) -> Rows {
    match &g.encoder {
        Some(e) => apply(linear(alpha, e), leaky),
        None => alpha.clone(),
    }
}

pub fn body(g: &Generator<f64>, input: &Rows, z: &Rows) -> Rows {
    let h = apply(linear(&concat(input, z), &g.layer1), leaky);
    apply(linear(&h, &g.layer2), f64::tanh)
}

pub fn g1(g: &Generator<f64>, alpha: &Rows, z: &Rows) -> (Rows, Rows) {
    let s = encode(g, alpha);
    (body(g, &s, z), s)
}

pub fn disc(d: &Discriminator<f64>, x: &Rows) -> (Vec<f64>, Rows) {
    let h = apply(linear(x, &d.trunk), |v| v.max(0.0));
    let critic = linear(&h, &d.critic).into_iter().map(|r| r[0]).collect();
    (critic, linear(&h, &d.classifier))
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn cross_entropy(logits: &Rows, labels: &[usize]) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(r, &l)| {
            let m = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + r.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - r[l]
        })
        .sum();
    total / labels.len() as f64
}

/// Input gradient of the critic for one row, derived by hand:
/// `dc/dx_i = sum_k W_trunk[i,k] * [pre_k > 0] * W_critic[k,0]`.
pub fn critic_input_grad(d: &Discriminator<f64>, x: &[f64]) -> Vec<f64> {
    let pre = &linear(&vec![x.to_vec()], &d.trunk)[0];
    let (d_in, hidden) = (d.trunk.weight.shape()[0], d.trunk.weight.shape()[1]);
    (0..d_in)
        .map(|i| {
            (0..hidden)
                .filter(|&k| pre[k] > 0.0)
                .map(|k| d.trunk.weight.get(i, k) * d.critic.weight.get(k, 0))
                .sum()
        })
        .collect()
}

pub fn gradient_penalty(d: &Discriminator<f64>, real: &Rows, fake: &Rows, eps: &[f64]) -> f64 {
    let terms: Vec<f64> = real
        .iter()
        .zip(fake)
        .zip(eps)
        .map(|((r, f), &e)| {
            let xt: Vec<f64> = r.iter().zip(f).map(|(a, b)| e * a + (1.0 - e) * b).collect();
            let g = critic_input_grad(d, &xt);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm - 1.0).powi(2)
        })
        .collect();
    mean(&terms)
}

pub fn pivot(x_hat: &Rows, labels: &[usize], stats: &ClassStats<f64>) -> f64 {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let d = x_hat[0].len();
    let mut total = 0.0;
    for &c in &classes {
        let mut m = vec![0.0; d];
        let mut n = 0.0;
        for (r, &l) in x_hat.iter().zip(labels) {
            if l == c {
                for j in 0..d {
                    m[j] += r[j];
                }
                n += 1.0;
            }
        }
        let centre = stats.mean_of(c).unwrap();
        total += (0..d).map(|j| (m[j] / n - centre[j]).powi(2)).sum::<f64>();
    }
    total / classes.len() as f64
}

pub fn sq_error(a: &Rows, b: &Rows) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>())
        .sum()
}
