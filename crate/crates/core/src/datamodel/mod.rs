//! Datasets of visual features, per-class semantics and labels, plus
//! seen/unseen splits and the synthetic generator used for desk-scale runs.

mod io;
mod scaler;
mod split;
mod synth;

pub use io::{load_dataset, load_split, save_dataset, save_split, write_matrix_f32};
pub use scaler::MinMaxScaler;
pub use split::{holdout_seen, make_split, Holdout, Split, SplitStyle};
pub use synth::{generate_synthetic, median_mean_distance, SynthConfig, SyntheticData};

use crate::error::{dim_err, Error, Result};
use crate::{Real, Tensor};

/// Visual features `x` (one row per sample), one semantic row per class, and labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub visual: Tensor<f64>,
    pub semantic: Tensor<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub super_class: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(
        visual: Tensor<f64>,
        semantic: Tensor<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        super_class: Option<Vec<usize>>,
    ) -> Result<Self> {
        let ds = Self {
            visual,
            semantic,
            labels,
            class_names,
            super_class,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, _) = self.visual.dims2()?;
        let (c, _) = self.semantic.dims2()?;
        if n != self.labels.len() {
            return Err(dim_err("dataset", format!("{n} visual rows but {} labels", self.labels.len())));
        }
        if self.class_names.len() != c {
            return Err(dim_err(
                "dataset",
                format!("{c} semantic rows but {} class names", self.class_names.len()),
            ));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= c) {
            return Err(Error::Input(format!("label {bad} out of range for {c} classes")));
        }
        if let Some(sc) = &self.super_class {
            if sc.len() != c {
                return Err(dim_err("dataset", format!("{} super-class ids for {c} classes", sc.len())));
            }
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.semantic.rows()
    }

    pub fn d_v(&self) -> usize {
        self.visual.cols()
    }

    pub fn d_s(&self) -> usize {
        self.semantic.cols()
    }

    /// Sample indices of `class`, in storage order.
    pub fn samples_of(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Per-class means of visual features.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats<F> {
    classes: Vec<usize>,
    pub means: Tensor<F>,
}

impl<F: Real> ClassStats<F> {
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn mean_of(&self, class: usize) -> Option<&[F]> {
        self.classes.iter().position(|&c| c == class).map(|i| self.means.row(i))
    }
}

/// Arithmetic mean of the rows of `features` labeled with each of `classes`.
pub fn class_means<F: Real>(features: &Tensor<F>, labels: &[usize], classes: &[usize]) -> Result<ClassStats<F>> {
    let (n, d) = features.dims2()?;
    if n != labels.len() {
        return Err(dim_err("class_means", format!("{n} rows, {} labels", labels.len())));
    }
    let mut means = Tensor::zeros(&[classes.len(), d]);
    for (k, &c) in classes.iter().enumerate() {
        let mut count = 0usize;
        let acc = means.row_mut(k);
        for (i, _) in labels.iter().enumerate().filter(|&(_, &l)| l == c) {
            for (a, &v) in acc.iter_mut().zip(features.row(i)) {
                *a += v;
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::Input(format!("class {c} has no samples")));
        }
        let inv = F::one() / F::from_f64(count as f64);
        acc.iter_mut().for_each(|a| *a *= inv);
    }
    Ok(ClassStats {
        classes: classes.to_vec(),
        means,
    })
}
