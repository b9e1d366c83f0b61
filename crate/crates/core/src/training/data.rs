use rand::seq::index;
use rand::Rng as _;

use crate::datamodel::{class_means, ClassStats, Dataset, Holdout, MinMaxScaler, Split};
use crate::error::{Error, Result};
use crate::ndmath::{gaussian_sample, Rng};
use crate::{Real, Tensor};

/// Training view of a dataset: scaled seen-class features and all class semantics.
#[derive(Clone, Debug)]
pub struct TrainData<F> {
    /// Visual features of the training rows, min-max scaled to [-1, 1].
    pub x: Tensor<F>,
    pub labels: Vec<usize>,
    /// One semantic row per class, seen and unseen.
    pub semantic: Tensor<F>,
    /// Seen-class means in scaled space.
    pub stats: ClassStats<F>,
    pub scaler: MinMaxScaler,
    pub seen_classes: Vec<usize>,
}

impl<F: Real> TrainData<F> {
    /// Uses `holdout.train` rows; the scaler is fit on exactly those rows.
    pub fn new(dataset: &Dataset, split: &Split, holdout: &Holdout) -> Result<Self> {
        split.validate(dataset)?;
        if holdout.train.is_empty() {
            return Err(Error::Input("no training samples".into()));
        }
        if let Some(&bad) = holdout.train.iter().find(|&&i| split.unseen_classes.contains(&dataset.labels[i])) {
            return Err(Error::Input(format!("training row {bad} belongs to an unseen class")));
        }
        let scaler = MinMaxScaler::fit(&dataset.visual, &holdout.train)?;
        let x: Tensor<F> = scaler.transform(&dataset.visual.select_rows(&holdout.train))?;
        let labels: Vec<usize> = holdout.train.iter().map(|&i| dataset.labels[i]).collect();
        let stats = class_means(&x, &labels, &split.seen_classes)?;
        Ok(Self {
            x,
            labels,
            semantic: dataset.semantic.cast(),
            stats,
            scaler,
            seen_classes: split.seen_classes.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Draws `b` training rows: without replacement when `b <= N`, otherwise with.
    pub fn sample_batch(&self, rng: &mut Rng, b: usize) -> Batch<F> {
        let n = self.len();
        let idx: Vec<usize> = if b <= n {
            index::sample(rng, n, b).into_vec()
        } else {
            (0..b).map(|_| rng.random_range(0..n)).collect()
        };
        self.batch_of(&idx)
    }

    pub fn batch_of(&self, idx: &[usize]) -> Batch<F> {
        let labels: Vec<usize> = idx.iter().map(|&i| self.labels[i]).collect();
        Batch {
            x: self.x.select_rows(idx),
            alpha: self.semantic.select_rows(&labels),
            labels,
        }
    }
}

/// Real features, the semantic row of each label, and the labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<F> {
    pub x: Tensor<F>,
    pub alpha: Tensor<F>,
    pub labels: Vec<usize>,
}

impl<F: Real> Batch<F> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Random inputs of one update: G1 noise, G2 noise, and interpolation weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Draws<F> {
    pub z: Tensor<F>,
    pub z2: Tensor<F>,
    pub eps: Vec<F>,
}

impl<F: Real> Draws<F> {
    /// Draws `z`, then `z2` unless shared, then `eps`.
    pub fn sample(rng: &mut Rng, b: usize, d_noise: usize, shared_noise: bool) -> Self {
        let z: Tensor<F> = gaussian_sample(rng, &[b, d_noise]);
        let z2 = if shared_noise { z.clone() } else { gaussian_sample(rng, &[b, d_noise]) };
        let eps = (0..b).map(|_| F::from_f64(rng.random::<f64>())).collect();
        Self { z, z2, eps }
    }

    /// Only `z` and `eps`, for the forward pair.
    pub fn sample_forward(rng: &mut Rng, b: usize, d_noise: usize) -> Self {
        let z: Tensor<F> = gaussian_sample(rng, &[b, d_noise]);
        let eps = (0..b).map(|_| F::from_f64(rng.random::<f64>())).collect();
        Self {
            z2: z.clone(),
            z,
            eps,
        }
    }
}
