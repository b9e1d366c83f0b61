#![allow(dead_code)]

pub mod eval_oracle;
pub mod gradients;
pub mod loss_fixture;
pub mod oracle;

use cyclezsl_core::ndmath::{Tape, Var};
use cyclezsl_core::{Result, Tensor};

pub const FD_STEP: f64 = 1e-5;
pub const RTOL: f64 = 1e-4;

/// Scalar-valued function of several tensors, evaluated on a fresh tape.
pub type Objective<'a> = dyn for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Result<Var<'t, f64>> + 'a;

pub fn eval(f: &Objective<'_>, inputs: &[Tensor<f64>]) -> f64 {
    let tape = Tape::new();
    let vars: Vec<_> = inputs.iter().map(|t| tape.constant(t.clone()).unwrap()).collect();
    f(&tape, &vars).unwrap().item().unwrap()
}

/// Central finite-difference gradient of `f` with respect to every input.
pub fn numeric_gradients(f: &Objective<'_>, inputs: &[Tensor<f64>], step: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for k in 0..inputs.len() {
        let mut g = Vec::with_capacity(inputs[k].len());
        for i in 0..inputs[k].len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[i] += step;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[i] -= step;
            g.push((eval(f, &plus) - eval(f, &minus)) / (2.0 * step));
        }
        out.push(g);
    }
    out
}

pub fn analytic_gradients(f: &Objective<'_>, inputs: &[Tensor<f64>]) -> Vec<Vec<f64>> {
    let tape = Tape::new();
    let vars: Vec<_> = inputs.iter().map(|t| tape.param(t.clone()).unwrap()).collect();
    let root = f(&tape, &vars).unwrap();
    let grads = tape.backward(root).unwrap();
    vars.iter().map(|v| grads.wrt(*v).data().to_vec()).collect()
}

/// Relative closeness with a small floor so near-zero entries compare sensibly.
pub fn close(a: f64, n: f64, rtol: f64) -> bool {
    (a - n).abs() <= rtol * (n.abs().max(a.abs()) + 1e-3)
}

/// Asserts analytic and central-difference gradients agree within `rtol`.
pub fn check_gradients(name: &str, f: &Objective<'_>, inputs: &[Tensor<f64>], rtol: f64) {
    let analytic = analytic_gradients(f, inputs);
    let numeric = numeric_gradients(f, inputs, FD_STEP);
    for (k, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        for (i, (&ai, &ni)) in a.iter().zip(n).enumerate() {
            assert!(
                close(ai, ni, rtol),
                "{name}: input {k} element {i}: analytic {ai} vs numeric {ni}"
            );
        }
    }
}

pub fn random_tensor(seed: u64, shape: &[usize]) -> Tensor<f64> {
    cyclezsl_core::ndmath::gaussian_sample(&mut cyclezsl_core::ndmath::seeded_rng(seed), shape)
}
