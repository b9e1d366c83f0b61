//! Small random networks and batches for checking every training loss.

use super::{check_gradients, random_tensor, RTOL};
use cyclezsl_core::datamodel::{class_means, ClassStats};
use cyclezsl_core::ndmath::{Tape, Var};
use cyclezsl_core::networks::{init_networks, BoundDiscriminator, BoundGenerator, CycleTarget, NetSpec, Networks, ParamSet};
use cyclezsl_core::training::losses::{cycle_loss, loss_d1, loss_d2, loss_g1, loss_g2, LossConfig};
use cyclezsl_core::training::{Batch, Draws};
use cyclezsl_core::{Result, Tensor};

pub const B: usize = 4;
pub const LABELS: [usize; B] = [0, 1, 0, 2];

pub fn spec(target: CycleTarget) -> NetSpec {
    NetSpec {
        d_s: 6,
        d_embed: 4,
        d_noise: 3,
        d_hidden: 5,
        d_v: 4,
        num_classes: 3,
        d_hidden_disc: 5,
        attribute_mode: false,
        cycle_target: target,
    }
}

pub struct Fixture {
    pub spec: NetSpec,
    pub nets: Networks<f64>,
    pub batch: Batch<f64>,
    pub draws: Draws<f64>,
    pub stats: ClassStats<f64>,
}

/// Random nets with every parameter (biases included) at a generic scale.
pub fn fixture(seed: u64, target: CycleTarget) -> Fixture {
    let spec = spec(target);
    let mut nets: Networks<f64> = init_networks(&spec, seed).unwrap();
    for (k, t) in nets.all_params_mut().into_iter().enumerate() {
        let shape = t.shape().to_vec();
        *t = random_tensor(seed * 100 + k as u64, &shape).map(|v| 0.6 * v);
    }
    let semantic = random_tensor(seed + 1, &[3, spec.d_s]).map(f64::abs);
    let alpha = semantic.select_rows(&LABELS);
    let x = random_tensor(seed + 2, &[B, spec.d_v]).map(|v| v.tanh());
    let draws = Draws {
        z: random_tensor(seed + 3, &[B, spec.d_noise]),
        z2: random_tensor(seed + 4, &[B, spec.d_noise]),
        eps: vec![0.1, 0.7, 0.4, 0.95],
    };
    let centres = random_tensor(seed + 5, &[9, spec.d_v]).map(|v| v.tanh());
    let stats = class_means(&centres, &[0, 1, 2, 0, 1, 2, 0, 1, 2], &[0, 1, 2]).unwrap();
    Fixture {
        spec,
        nets,
        batch: Batch {
            x,
            alpha,
            labels: LABELS.to_vec(),
        },
        draws,
        stats,
    }
}

pub fn cfg(target: CycleTarget) -> LossConfig {
    LossConfig {
        gp_coeff: 10.0,
        pivot_coeff: 0.7,
        cls_inverse_coeff: 12.0,
        cyc_coeff: 10.0,
        cycle_target: target,
        ..LossConfig::default()
    }
}

pub fn assert_near(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol * (1.0 + b.abs()), "{what}: {a} vs {b}");
}

pub struct Bound<'t> {
    pub theta: BoundGenerator<'t, f64>,
    pub w: BoundDiscriminator<'t, f64>,
    pub delta: BoundGenerator<'t, f64>,
    pub zeta: BoundDiscriminator<'t, f64>,
}

pub fn bind_all<'t>(tape: &'t Tape<f64>, nets: &Networks<f64>, trainable: bool) -> Bound<'t> {
    Bound {
        theta: nets.g1.bind(tape, trainable).unwrap(),
        w: nets.d1.bind(tape, trainable).unwrap(),
        delta: nets.g2.bind(tape, trainable).unwrap(),
        zeta: nets.d2.bind(tape, trainable).unwrap(),
    }
}

#[derive(Clone, Copy)]
pub enum Loss {
    D1,
    G1,
    D2,
    G2,
    Cycle,
}

pub fn eval_loss<'t>(loss: Loss, c: &LossConfig, f: &Fixture, n: &Bound<'t>) -> Result<Var<'t, f64>> {
    let s = &f.spec;
    match loss {
        Loss::D1 => loss_d1(c, s, &n.theta, &n.w, &f.batch, &f.draws),
        Loss::G1 => Ok(loss_g1(c, s, &n.theta, &n.w, &f.batch, &f.draws.z, &f.stats)?.total),
        Loss::D2 => loss_d2(c, s, &n.theta, &n.delta, &n.zeta, &f.batch, &f.draws),
        Loss::G2 => loss_g2(c, s, &n.theta, &n.delta, &n.zeta, &f.batch, &f.draws),
        Loss::Cycle => cycle_loss(c, s, &n.theta, &n.delta, &f.batch, &f.draws),
    }
}

/// Pins a closure to the higher-ranked objective signature.
pub fn hr<G>(g: G) -> G
where
    G: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Result<Var<'t, f64>>,
{
    g
}

pub fn params_of(nets: &Networks<f64>, which: &[usize]) -> Vec<Tensor<f64>> {
    let groups: [Vec<&Tensor<f64>>; 4] = [nets.g1.params(), nets.d1.params(), nets.g2.params(), nets.d2.params()];
    which.iter().flat_map(|&k| groups[k].iter().map(|t| (*t).clone())).collect()
}

/// Finite-difference check of `loss` with respect to the networks in `which`
/// (0 = g1, 1 = d1, 2 = g2, 3 = d2), the others held fixed.
pub fn fd_check(name: &str, loss: Loss, f: &Fixture, c: &LossConfig, which: &[usize]) {
    let inputs = params_of(&f.nets, which);
    let objective = hr(|tape, vars| {
        let mut n = bind_all(tape, &f.nets, false);
        let mut off = 0;
        for &k in which {
            let len = match k {
                0 => f.nets.g1.params().len(),
                1 | 3 => 6,
                _ => f.nets.g2.params().len(),
            };
            let vs = &vars[off..off + len];
            match k {
                0 => n.theta = BoundGenerator::from_vars(vs)?,
                1 => n.w = BoundDiscriminator::from_vars(vs)?,
                2 => n.delta = BoundGenerator::from_vars(vs)?,
                _ => n.zeta = BoundDiscriminator::from_vars(vs)?,
            }
            off += len;
        }
        eval_loss(loss, c, f, &n)
    });
    check_gradients(name, &objective, &inputs, RTOL);
}

/// Every loss, each against the networks it updates, in both cycle-target modes.
pub fn loss_suite() {
    for target in [CycleTarget::TextFeature, CycleTarget::Tfidf] {
        let f = fixture(11, target);
        let c = cfg(target);
        fd_check("loss_d1 (with GP)", Loss::D1, &f, &c, &[1]);
        fd_check("loss_g1", Loss::G1, &f, &c, &[0]);
        fd_check("loss_d2 (with GP)", Loss::D2, &f, &c, &[3]);
        fd_check("loss_g2", Loss::G2, &f, &c, &[2]);
        fd_check("cycle_loss", Loss::Cycle, &f, &c, &[0, 2]);
    }
}
