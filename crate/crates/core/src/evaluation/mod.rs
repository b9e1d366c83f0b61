//! Zero-shot recognition against a synthesized feature bank, generalized
//! evaluation over the seen-unseen trade-off, and reports.

mod bank;
mod gzsl;
mod knn;
mod ridge;

pub use bank::{synthesize, SynthesizedBank, DEFAULT_BANK_SIZE, SYNTH_STREAM};
pub use gzsl::{
    ausuc, ausuc_points, default_gamma_grid, nearest_reference_scores, su_curve, ScoreMatrix, SuCurve, SuPoint,
    GAMMA_GRID_POINTS, GAMMA_PERCENTILE,
};
pub use knn::{euclidean, knn_classify, macro_accuracy, top1};
pub use ridge::{ridge_top1, RidgeModel, RIDGE_LAMBDAS};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datamodel::{Dataset, Holdout, Split};
use crate::error::{Error, Result};
use crate::training::TrainState;
use crate::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Synthesized rows per unseen class.
    pub n_per_class: usize,
    pub k: usize,
    pub seed: u64,
    /// Record wall-clock time in the report. Off by default so that
    /// reports are reproducible byte for byte.
    pub timing: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_per_class: DEFAULT_BANK_SIZE,
            k: 1,
            seed: 0,
            timing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub top1_unseen: f64,
    pub ausuc: f64,
    pub curve: SuCurve,
    pub config_hash: String,
    pub seed: u64,
    pub k: usize,
    pub n_per_class: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_secs: Option<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Scores of the generalized test set (held-out seen samples, then unseen
/// samples) against real seen training features and the bank.
pub fn gzsl_scores(dataset: &Dataset, split: &Split, holdout: &Holdout, bank: &SynthesizedBank) -> Result<(ScoreMatrix, Vec<usize>)> {
    let mut classes: Vec<usize> = split.seen_classes.iter().chain(&split.unseen_classes).copied().collect();
    classes.sort_unstable();
    let seen: Vec<bool> = classes.iter().map(|c| split.seen_classes.contains(c)).collect();
    let train_x = dataset.visual.select_rows(&holdout.train);
    let mut refs = Vec::with_capacity((holdout.train.len() + bank.labels.len()) * dataset.d_v());
    refs.extend_from_slice(train_x.data());
    refs.extend_from_slice(bank.features.data());
    let refs = Tensor::new(vec![holdout.train.len() + bank.labels.len(), dataset.d_v()], refs)?;
    let ref_labels: Vec<usize> = holdout
        .train
        .iter()
        .map(|&i| dataset.labels[i])
        .chain(bank.labels.iter().copied())
        .collect();
    let test: Vec<usize> = holdout.seen_test.iter().chain(&holdout.unseen_test).copied().collect();
    let truth = test.iter().map(|&i| dataset.labels[i]).collect();
    let scores = nearest_reference_scores(&refs, &ref_labels, &classes, &dataset.visual.select_rows(&test))?;
    Ok((ScoreMatrix::new(classes, seen, scores)?, truth))
}

/// Synthesizes the unseen bank from a trained state, then measures unseen
/// top-1 by k-NN against the bank and AUSUC over the default grid.
pub fn evaluate<F: Real>(
    state: &TrainState<F>,
    dataset: &Dataset,
    split: &Split,
    holdout: &Holdout,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let start = Instant::now();
    if holdout.unseen_test.is_empty() {
        return Err(Error::Input("no unseen test samples".into()));
    }
    let bank = synthesize(
        &state.spec,
        &state.nets.g1,
        &state.scaler,
        &dataset.semantic,
        &split.unseen_classes,
        opts.n_per_class,
        opts.seed,
    )?;
    let queries = dataset.visual.select_rows(&holdout.unseen_test);
    let truth: Vec<usize> = holdout.unseen_test.iter().map(|&i| dataset.labels[i]).collect();
    let pred = knn_classify(&bank.features, &bank.labels, &queries, opts.k)?;
    let top1_unseen = top1(&pred, &truth)?;
    let (scores, gz_truth) = gzsl_scores(dataset, split, holdout, &bank)?;
    let curve = su_curve(&scores, &gz_truth, &default_gamma_grid(&scores))?;
    Ok(EvalReport {
        top1_unseen,
        ausuc: ausuc(&curve)?,
        curve,
        config_hash: state.config.hash(),
        seed: opts.seed,
        k: opts.k,
        n_per_class: opts.n_per_class,
        timing_secs: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}
