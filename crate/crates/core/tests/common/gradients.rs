//! Finite-difference suites shared by the unit tests and the acceptance run.

use super::{analytic_gradients, check_gradients, close, numeric_gradients, random_tensor, Objective, FD_STEP, RTOL};
use cyclezsl_core::ndmath::{grad_norm, Tape, Var};
use cyclezsl_core::{Result, Tensor};

/// Reduces any tensor to a scalar through a fixed random weighting.
fn weighted<'t>(tape: &'t Tape<f64>, v: Var<'t, f64>, seed: u64) -> Result<Var<'t, f64>> {
    let w = tape.constant(random_tensor(seed, &v.shape()))?;
    v.mul(w)?.sum()
}

/// Every first-order primitive.
pub fn primitive_suite() {
    type Case = (&'static str, Box<Objective<'static>>, Vec<Tensor<f64>>);
    let m = |s, shape: &[usize]| random_tensor(s, shape);
    let cases: Vec<Case> = vec![
        ("add", Box::new(|tp, v| weighted(tp, v[0].add(v[1])?, 100)), vec![m(1, &[3, 4]), m(2, &[3, 4])]),
        ("sub", Box::new(|tp, v| weighted(tp, v[0].sub(v[1])?, 101)), vec![m(1, &[3, 4]), m(2, &[3, 4])]),
        ("mul", Box::new(|tp, v| weighted(tp, v[0].mul(v[1])?, 102)), vec![m(1, &[3, 4]), m(2, &[3, 4])]),
        ("neg", Box::new(|tp, v| weighted(tp, v[0].neg()?, 103)), vec![m(1, &[4])]),
        ("scale", Box::new(|tp, v| weighted(tp, v[0].scale(-2.5)?, 104)), vec![m(1, &[4])]),
        ("add_scalar", Box::new(|tp, v| weighted(tp, v[0].add_scalar(1.5)?, 105)), vec![m(1, &[4])]),
        ("matmul", Box::new(|tp, v| weighted(tp, v[0].matmul(v[1])?, 106)), vec![m(1, &[3, 4]), m(2, &[4, 2])]),
        ("matmul_ta", Box::new(|tp, v| weighted(tp, v[0].matmul_t(true, v[1], false)?, 107)), vec![m(1, &[4, 3]), m(2, &[4, 2])]),
        ("matmul_tb", Box::new(|tp, v| weighted(tp, v[0].matmul_t(false, v[1], true)?, 108)), vec![m(1, &[3, 4]), m(2, &[2, 4])]),
        ("matmul_tab", Box::new(|tp, v| weighted(tp, v[0].matmul_t(true, v[1], true)?, 109)), vec![m(1, &[4, 3]), m(2, &[2, 4])]),
        ("sum", Box::new(|_, v| v[0].sum()?.scale(3.0)), vec![m(1, &[2, 3])]),
        ("mean", Box::new(|_, v| v[0].square()?.mean()), vec![m(1, &[2, 3])]),
        ("broadcast_scalar", Box::new(|tp, v| weighted(tp, v[0].sum()?.broadcast_scalar(&[2, 2])?, 110)), vec![m(1, &[3])]),
        ("row_sum", Box::new(|tp, v| weighted(tp, v[0].row_sum()?, 111)), vec![m(1, &[3, 4])]),
        ("col_sum", Box::new(|tp, v| weighted(tp, v[0].col_sum()?, 112)), vec![m(1, &[3, 4])]),
        ("broadcast_rows", Box::new(|tp, v| weighted(tp, v[0].broadcast_rows(3)?, 113)), vec![m(1, &[4])]),
        ("broadcast_cols", Box::new(|tp, v| weighted(tp, v[0].broadcast_cols(4)?, 114)), vec![m(1, &[3])]),
        ("reshape", Box::new(|tp, v| weighted(tp, v[0].reshape(&[2, 6])?, 115)), vec![m(1, &[3, 4])]),
        ("leaky_relu", Box::new(|tp, v| weighted(tp, v[0].leaky_relu(0.2)?, 116)), vec![m(1, &[3, 4])]),
        ("relu", Box::new(|tp, v| weighted(tp, v[0].relu()?, 117)), vec![m(1, &[3, 4])]),
        ("tanh", Box::new(|tp, v| weighted(tp, v[0].tanh()?, 118)), vec![m(1, &[3, 4])]),
        ("sqrt", Box::new(|tp, v| weighted(tp, v[0].square()?.add_scalar(0.5)?.sqrt()?, 119)), vec![m(1, &[5])]),
        ("recip", Box::new(|tp, v| weighted(tp, v[0].square()?.add_scalar(0.5)?.recip()?, 120)), vec![m(1, &[5])]),
        ("row_norm", Box::new(|tp, v| weighted(tp, grad_norm(v[0])?, 121)), vec![m(1, &[3, 4])]),
        ("concat_cols", Box::new(|tp, v| weighted(tp, v[0].concat_cols(v[1])?, 122)), vec![m(1, &[3, 2]), m(2, &[3, 4])]),
        ("slice_cols", Box::new(|tp, v| weighted(tp, v[0].slice_cols(1, 3)?, 123)), vec![m(1, &[3, 4])]),
        ("pad_cols", Box::new(|tp, v| weighted(tp, v[0].pad_cols(2, 6)?, 124)), vec![m(1, &[3, 3])]),
        ("softmax", Box::new(|tp, v| weighted(tp, v[0].softmax()?, 125)), vec![m(1, &[3, 5])]),
        ("softmax_cross_entropy", Box::new(|_, v| v[0].softmax_cross_entropy(&[1, 0, 4])), vec![m(1, &[3, 5])]),
    ];
    for (name, f, inputs) in &cases {
        check_gradients(name, f.as_ref(), inputs, RTOL);
    }
}

pub fn second_order_suite() {
    // Gradients of gradient-dependent objectives for every op used on a
    // critic's input-gradient path.
    let f: Box<Objective<'static>> = Box::new(|tp, v| {
        let x = tp.param((*v[0].value()).clone())?;
        let h = x.matmul(v[1])?.tanh()?.matmul(v[2])?.softmax()?;
        let y = weighted(tp, h, 200)?;
        let g = tp.grad(y, &[x], true)?[0];
        g.row_norm()?.add_scalar(-1.0)?.square()?.mean()
    });
    let inputs = vec![random_tensor(1, &[3, 4]), random_tensor(2, &[4, 5]), random_tensor(3, &[5, 3])];
    let analytic = analytic_gradients(f.as_ref(), &inputs);
    let numeric = numeric_gradients(f.as_ref(), &inputs, FD_STEP);
    // The inner leaf is a copy, so the outer input 0 gets no gradient path.
    for k in 1..3 {
        for (a, n) in analytic[k].iter().zip(&numeric[k]) {
            assert!(close(*a, *n, RTOL), "input {k}: {a} vs {n}");
        }
    }
}

/// `mean((||d critic / d x|| - 1)^2)` for a ReLU-trunk critic.
pub fn penalty<'t>(tape: &'t Tape<f64>, x: &Tensor<f64>, w: &[Var<'t, f64>]) -> Result<Var<'t, f64>> {
    let xt = tape.param(x.clone())?;
    let b = x.rows();
    let h = xt.matmul(w[0])?.add(w[1].broadcast_rows(b)?)?.relu()?;
    let critic = h.matmul(w[2])?.sum()?;
    let g = tape.grad(critic, &[xt], true)?[0];
    grad_norm(g)?.add_scalar(-1.0)?.square()?.mean()?.scale(10.0)
}

/// Double backprop through a ReLU critic's input gradient.
pub fn gradient_penalty_suite() {
    let x = random_tensor(10, &[4, 3]);
    let inputs = vec![random_tensor(11, &[3, 5]), random_tensor(12, &[5]), random_tensor(13, &[5, 1])];
    let xc = x.clone();
    let f: Box<Objective<'static>> = Box::new(move |tp, v| penalty(tp, &xc, v));
    check_gradients("gradient_penalty", f.as_ref(), &inputs, RTOL);
}
