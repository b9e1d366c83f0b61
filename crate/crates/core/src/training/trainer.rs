use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::datamodel::MinMaxScaler;
use crate::error::{Error, Result};
use crate::ndmath::{seeded_rng, AdamState, Rng, Tape, Var};
use crate::networks::{init_networks, NetSpec, Networks, ParamSet};
use crate::{Real, Tensor};

use super::losses::{cycle_loss, loss_d1, loss_d2, loss_g1, loss_g2, LossConfig};
use super::{CycleOptimizer, Draws, LipschitzMode, LossHistory, LossRecord, TrainConfig, TrainData};

/// RNG stream of the forward pair (D1 and G1 updates).
pub const FORWARD_STREAM: u64 = 1;
/// RNG stream of the inverse pair and the cycle update.
pub const INVERSE_STREAM: u64 = 2;

/// Cumulative number of parameter updates of each kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateCounters {
    pub d1: u64,
    pub d2: u64,
    pub g1: u64,
    pub g2: u64,
    pub cycle: u64,
}

/// Serializable position of a ChaCha stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    /// Decimal, since JSON numbers cannot hold a `u128`.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &Rng) -> Self {
        Self {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<Rng> {
        let bytes = hex::decode(&self.seed).map_err(|e| Error::Corrupt(format!("rng seed: {e}")))?;
        let seed: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Corrupt("rng seed must be 32 bytes".into()))?;
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|e| Error::Corrupt(format!("rng position: {e}")))?;
        let mut rng = Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(stream);
    rng
}

/// Everything needed to continue training bit-identically.
#[derive(Clone, Debug)]
pub struct TrainState<F> {
    pub spec: NetSpec,
    pub config: TrainConfig,
    pub nets: Networks<F>,
    pub adam_g1: AdamState<F>,
    pub adam_d1: AdamState<F>,
    pub adam_g2: AdamState<F>,
    pub adam_d2: AdamState<F>,
    /// Joint state over G1 then G2 parameters for the cycle update; unused
    /// with [`CycleOptimizer::Shared`].
    pub adam_cycle: AdamState<F>,
    pub iteration: u64,
    pub forward_rng: Rng,
    pub inverse_rng: Rng,
    pub history: LossHistory,
    pub counters: UpdateCounters,
    pub scaler: MinMaxScaler,
}

fn grads_of<F: Real>(tape: &Tape<F>, root: Var<'_, F>, vars: &[Var<'_, F>]) -> Result<Vec<Tensor<F>>> {
    let grads = tape.backward(root)?;
    Ok(vars.iter().map(|&v| grads.wrt(v)).collect())
}

fn check_params<F: Real>(net: &impl ParamSet<F>, op: &'static str) -> Result<()> {
    net.params().iter().try_for_each(|t| t.ensure_finite(op))
}

impl<F: Real> TrainState<F> {
    /// Fresh networks and optimizers for `data`.
    pub fn new(config: TrainConfig, data: &TrainData<F>) -> Result<Self> {
        config.validate()?;
        let spec = config.net_spec(data.semantic.cols(), data.x.cols(), data.semantic.rows());
        let nets: Networks<F> = init_networks(&spec, config.seed)?;
        let adam = config.adam();
        Ok(Self {
            adam_g1: AdamState::new(adam, nets.g1.params()),
            adam_d1: AdamState::new(adam, nets.d1.params()),
            adam_g2: AdamState::new(adam, nets.g2.params()),
            adam_d2: AdamState::new(adam, nets.d2.params()),
            adam_cycle: AdamState::new(adam, nets.g1.params().into_iter().chain(nets.g2.params())),
            forward_rng: stream_rng(config.seed, FORWARD_STREAM),
            inverse_rng: stream_rng(config.seed, INVERSE_STREAM),
            spec,
            config,
            nets,
            iteration: 0,
            history: LossHistory::default(),
            counters: UpdateCounters::default(),
            scaler: data.scaler.clone(),
        })
    }

    fn clip(&self) -> Option<F> {
        match self.config.lipschitz {
            LipschitzMode::WeightClip { c } => Some(F::from_f64(c)),
            LipschitzMode::GradientPenalty => None,
        }
    }

    /// One D1 update. Draws the batch, `z` and `eps` from the forward stream.
    pub fn update_d1(&mut self, data: &TrainData<F>, lc: &LossConfig) -> Result<f64> {
        let batch = data.sample_batch(&mut self.forward_rng, self.config.batch_size);
        let draws = Draws::sample_forward(&mut self.forward_rng, batch.len(), self.spec.d_noise);
        let tape = Tape::new();
        let theta = self.nets.g1.bind(&tape, false)?;
        let w = self.nets.d1.bind(&tape, true)?;
        let loss = loss_d1(lc, &self.spec, &theta, &w, &batch, &draws)?;
        let grads = grads_of(&tape, loss, &w.vars())?;
        let value = loss.item()?.as_f64();
        self.adam_d1.update(&mut self.nets.d1.params_mut(), &grads)?;
        if let Some(c) = self.clip() {
            self.nets.d1.clip(c);
        }
        check_params(&self.nets.d1, "d1 update")?;
        self.counters.d1 += 1;
        Ok(value)
    }

    /// One G1 update. Draws the batch and `z` from the forward stream.
    pub fn update_g1(&mut self, data: &TrainData<F>, lc: &LossConfig) -> Result<(f64, f64)> {
        let batch = data.sample_batch(&mut self.forward_rng, self.config.batch_size);
        let z: Tensor<F> = crate::ndmath::gaussian_sample(&mut self.forward_rng, &[batch.len(), self.spec.d_noise]);
        let tape = Tape::new();
        let theta = self.nets.g1.bind(&tape, true)?;
        let w = self.nets.d1.bind(&tape, false)?;
        let loss = loss_g1(lc, &self.spec, &theta, &w, &batch, &z, &data.stats)?;
        let grads = grads_of(&tape, loss.total, &theta.vars())?;
        let values = (loss.total.item()?.as_f64(), loss.pivot.item()?.as_f64());
        self.adam_g1.update(&mut self.nets.g1.params_mut(), &grads)?;
        check_params(&self.nets.g1, "g1 update")?;
        self.counters.g1 += 1;
        Ok(values)
    }

    /// One D2 update. Draws the batch, `z`, `z2` and `eps` from the inverse stream.
    pub fn update_d2(&mut self, data: &TrainData<F>, lc: &LossConfig) -> Result<f64> {
        let batch = data.sample_batch(&mut self.inverse_rng, self.config.batch_size);
        let draws = Draws::sample(
            &mut self.inverse_rng,
            batch.len(),
            self.spec.d_noise,
            self.config.shared_cycle_noise,
        );
        let tape = Tape::new();
        let theta = self.nets.g1.bind(&tape, false)?;
        let delta = self.nets.g2.bind(&tape, false)?;
        let zeta = self.nets.d2.bind(&tape, true)?;
        let loss = loss_d2(lc, &self.spec, &theta, &delta, &zeta, &batch, &draws)?;
        let grads = grads_of(&tape, loss, &zeta.vars())?;
        let value = loss.item()?.as_f64();
        self.adam_d2.update(&mut self.nets.d2.params_mut(), &grads)?;
        if let Some(c) = self.clip() {
            self.nets.d2.clip(c);
        }
        check_params(&self.nets.d2, "d2 update")?;
        self.counters.d2 += 1;
        Ok(value)
    }

    /// One G2 update from the inverse stream.
    pub fn update_g2(&mut self, data: &TrainData<F>, lc: &LossConfig) -> Result<f64> {
        let batch = data.sample_batch(&mut self.inverse_rng, self.config.batch_size);
        let draws = Draws::sample(
            &mut self.inverse_rng,
            batch.len(),
            self.spec.d_noise,
            self.config.shared_cycle_noise,
        );
        let tape = Tape::new();
        let theta = self.nets.g1.bind(&tape, false)?;
        let delta = self.nets.g2.bind(&tape, true)?;
        let zeta = self.nets.d2.bind(&tape, false)?;
        let loss = loss_g2(lc, &self.spec, &theta, &delta, &zeta, &batch, &draws)?;
        let grads = grads_of(&tape, loss, &delta.vars())?;
        let value = loss.item()?.as_f64();
        self.adam_g2.update(&mut self.nets.g2.params_mut(), &grads)?;
        check_params(&self.nets.g2, "g2 update")?;
        self.counters.g2 += 1;
        Ok(value)
    }

    /// Joint update of both generators by the cycle loss, from the inverse stream.
    ///
    /// Steps with the dedicated cycle Adam state, or with each generator's
    /// adversarial Adam state under [`CycleOptimizer::Shared`].
    pub fn update_cycle(&mut self, data: &TrainData<F>, lc: &LossConfig) -> Result<f64> {
        let batch = data.sample_batch(&mut self.inverse_rng, self.config.batch_size);
        let draws = Draws::sample(
            &mut self.inverse_rng,
            batch.len(),
            self.spec.d_noise,
            self.config.shared_cycle_noise,
        );
        let tape = Tape::new();
        let theta = self.nets.g1.bind(&tape, true)?;
        let delta = self.nets.g2.bind(&tape, true)?;
        let loss = cycle_loss(lc, &self.spec, &theta, &delta, &batch, &draws)?;
        let grads = tape.backward(loss)?;
        let g_theta: Vec<Tensor<F>> = theta.vars().iter().map(|&v| grads.wrt(v)).collect();
        let g_delta: Vec<Tensor<F>> = delta.vars().iter().map(|&v| grads.wrt(v)).collect();
        let value = loss.item()?.as_f64();
        match self.config.cycle_optimizer {
            CycleOptimizer::Separate => {
                let mut params = self.nets.g1.params_mut();
                params.extend(self.nets.g2.params_mut());
                let grads: Vec<Tensor<F>> = g_theta.into_iter().chain(g_delta).collect();
                self.adam_cycle.update(&mut params, &grads)?;
            }
            CycleOptimizer::Shared => {
                self.adam_g1.update(&mut self.nets.g1.params_mut(), &g_theta)?;
                self.adam_g2.update(&mut self.nets.g2.params_mut(), &g_delta)?;
            }
        }
        check_params(&self.nets.g1, "cycle update")?;
        check_params(&self.nets.g2, "cycle update")?;
        self.counters.cycle += 1;
        Ok(value)
    }

    fn step_inner(&mut self, data: &TrainData<F>) -> Result<LossRecord> {
        let lc = self.config.loss_config();
        let k = self.config.critic_steps;
        let inverse = self.config.inverse_enabled;
        let d2_on = inverse && lc.d2_active();
        let mut d1 = 0.0;
        for _ in 0..k {
            d1 += self.update_d1(data, &lc)?;
        }
        let mut d2 = 0.0;
        if d2_on {
            for _ in 0..k {
                d2 += self.update_d2(data, &lc)?;
            }
        }
        let (g1, pivot) = self.update_g1(data, &lc)?;
        let g2 = if d2_on { self.update_g2(data, &lc)? } else { 0.0 };
        let cyc = if inverse { self.update_cycle(data, &lc)? } else { 0.0 };
        Ok(LossRecord {
            iteration: self.iteration + 1,
            loss_d1: d1 / k as f64,
            loss_g1: g1,
            loss_d2: if d2_on { d2 / k as f64 } else { 0.0 },
            loss_g2: g2,
            loss_cyc: cyc,
            pivot,
        })
    }

    /// One full iteration: `critic_steps` D1 updates, `critic_steps` D2
    /// updates, one G1, one G2 and one joint cycle update.
    ///
    /// The inverse-pair updates run only when enabled by the configuration
    /// and ablation. A non-finite value aborts with [`Error::Diverged`].
    pub fn step(&mut self, data: &TrainData<F>) -> Result<()> {
        match self.step_inner(data) {
            Ok(record) => {
                self.iteration += 1;
                self.history.push(record);
                Ok(())
            }
            Err(e @ (Error::NonFinite { .. } | Error::Corrupt(_))) => Err(Error::Diverged {
                iteration: self.iteration + 1,
                cause: e.to_string(),
                history_csv: self.history.to_csv_string().unwrap_or_default(),
            }),
            Err(e) => Err(e),
        }
    }
}

/// Runs `iterations` steps.
pub fn train<F: Real>(state: &mut TrainState<F>, data: &TrainData<F>, iterations: usize) -> Result<()> {
    for _ in 0..iterations {
        state.step(data)?;
    }
    Ok(())
}
