//! Shared fixtures for the criterion benchmarks under `benches/`.

use cyclezsl_core::datamodel::{generate_synthetic, Holdout, SynthConfig, SyntheticData};
use cyclezsl_core::training::TrainConfig;

/// The desk-scale synthetic problem: 10 classes (7 seen), d_s 32, d_v 64.
pub fn desk_problem(seed: u64) -> (SyntheticData, Holdout, TrainConfig) {
    let cfg = SynthConfig { seed, ..SynthConfig::default() }
        .with_relative_noise(0.1)
        .expect("valid synthetic config");
    let data = generate_synthetic(&cfg).expect("synthetic data");
    let mut train = TrainConfig::desk_scale();
    train.seed = seed;
    let holdout = train.holdout(&data.dataset, &data.split).expect("holdout");
    (data, holdout, train)
}
