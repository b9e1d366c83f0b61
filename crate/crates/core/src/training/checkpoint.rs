//! Checkpoint directory: `meta.json` plus `params.bin`.
//!
//! The payload holds every network parameter (g1, d1, g2, d2 in
//! [`crate::networks::ParamSet`] order), followed by the first and second Adam
//! moments of the g1, d1, g2, d2 and cycle optimizers, as little-endian values
//! of the element type named by `dtype`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LossHistory, RngState, TrainConfig, TrainState, UpdateCounters};
use crate::datamodel::MinMaxScaler;
use crate::error::{Error, Result};
use crate::ndmath::AdamState;
use crate::networks::{zero_networks, NetSpec, Networks, ParamSet};
use crate::{Real, Tensor};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    dtype: String,
    net_spec: NetSpec,
    net_spec_hash: String,
    config: TrainConfig,
    config_hash: String,
    scaler: MinMaxScaler,
    iteration: u64,
    adam_steps: [u64; 5],
    forward_rng: RngState,
    inverse_rng: RngState,
    counters: UpdateCounters,
    history: LossHistory,
    payload_sha256: String,
}

fn adam_states<F: Real>(s: &TrainState<F>) -> [&AdamState<F>; 5] {
    [&s.adam_g1, &s.adam_d1, &s.adam_g2, &s.adam_d2, &s.adam_cycle]
}

fn payload_tensors<F: Real>(s: &TrainState<F>) -> Vec<&Tensor<F>> {
    let mut out = s.nets.all_params();
    for a in adam_states(s) {
        out.extend(a.m.iter());
        out.extend(a.v.iter());
    }
    out
}

pub fn save_checkpoint<F: Real>(state: &TrainState<F>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut payload = Vec::new();
    for t in payload_tensors(state) {
        for &v in t.data() {
            v.write_le(&mut payload);
        }
    }
    let meta = Meta {
        format_version: CHECKPOINT_VERSION,
        dtype: F::DTYPE.to_string(),
        net_spec: state.spec.clone(),
        net_spec_hash: state.spec.hash(),
        config: state.config.clone(),
        config_hash: state.config.hash(),
        scaler: state.scaler.clone(),
        iteration: state.iteration,
        adam_steps: adam_states(state).map(|a| a.step),
        forward_rng: RngState::capture(&state.forward_rng),
        inverse_rng: RngState::capture(&state.inverse_rng),
        counters: state.counters,
        history: state.history.clone(),
        payload_sha256: hex::encode(Sha256::digest(&payload)),
    };
    fs::write(dir.join("params.bin"), &payload)?;
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(fs::read(path)?)
}

fn fill<F: Real>(targets: Vec<&mut Tensor<F>>, bytes: &[u8], offset: &mut usize) {
    for t in targets {
        for v in t.data_mut() {
            *v = F::read_le(&bytes[*offset..*offset + F::BYTES]);
            *offset += F::BYTES;
        }
    }
}

/// Element type tag (`Real::DTYPE`) of the checkpoint in `dir`.
pub fn checkpoint_dtype(dir: &Path) -> Result<String> {
    #[derive(Deserialize)]
    struct Tag {
        dtype: String,
    }
    let tag: Tag = serde_json::from_slice(&read(&dir.join("meta.json"))?)?;
    Ok(tag.dtype)
}

/// Restores a state saved with the same element type.
pub fn load_checkpoint<F: Real>(dir: &Path) -> Result<TrainState<F>> {
    let meta: Meta = serde_json::from_slice(&read(&dir.join("meta.json"))?)?;
    if meta.format_version != CHECKPOINT_VERSION {
        return Err(Error::Version(format!(
            "format {} (expected {CHECKPOINT_VERSION})",
            meta.format_version
        )));
    }
    if meta.dtype != F::DTYPE {
        return Err(Error::Version(format!(
            "checkpoint holds {} values, requested {}",
            meta.dtype,
            F::DTYPE
        )));
    }
    if meta.net_spec.hash() != meta.net_spec_hash {
        return Err(Error::Version("network spec hash does not match its spec".into()));
    }
    meta.net_spec.validate()?;
    let payload = read(&dir.join("params.bin"))?;
    if hex::encode(Sha256::digest(&payload)) != meta.payload_sha256 {
        return Err(Error::Corrupt("params.bin checksum mismatch".into()));
    }
    let mut nets: Networks<F> = zero_networks(&meta.net_spec);
    let adam_cfg = meta.config.adam();
    let mut adams = [
        AdamState::new(adam_cfg, nets.g1.params()),
        AdamState::new(adam_cfg, nets.d1.params()),
        AdamState::new(adam_cfg, nets.g2.params()),
        AdamState::new(adam_cfg, nets.d2.params()),
        AdamState::new(adam_cfg, nets.g1.params().into_iter().chain(nets.g2.params())),
    ];
    let expected: usize = nets.all_params().iter().map(|t| t.len()).sum::<usize>()
        + adams
            .iter()
            .map(|a| a.m.iter().chain(&a.v).map(Tensor::len).sum::<usize>())
            .sum::<usize>();
    if payload.len() != expected * F::BYTES {
        return Err(Error::Corrupt(format!(
            "params.bin holds {} bytes, spec implies {}",
            payload.len(),
            expected * F::BYTES
        )));
    }
    let mut offset = 0;
    fill(nets.all_params_mut(), &payload, &mut offset);
    for (a, step) in adams.iter_mut().zip(meta.adam_steps) {
        a.step = step;
        fill(a.m.iter_mut().collect(), &payload, &mut offset);
        fill(a.v.iter_mut().collect(), &payload, &mut offset);
    }
    nets.check(&meta.net_spec)?;
    let [adam_g1, adam_d1, adam_g2, adam_d2, adam_cycle] = adams;
    Ok(TrainState {
        spec: meta.net_spec,
        config: meta.config,
        nets,
        adam_g1,
        adam_d1,
        adam_g2,
        adam_d2,
        adam_cycle,
        iteration: meta.iteration,
        forward_rng: meta.forward_rng.restore()?,
        inverse_rng: meta.inverse_rng.restore()?,
        history: meta.history,
        counters: meta.counters,
        scaler: meta.scaler,
    })
}
