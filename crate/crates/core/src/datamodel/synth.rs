use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{make_split, Dataset, Split, SplitStyle};
use crate::error::{Error, Result};
use crate::ndmath::{gaussian_sample, matmul, seeded_rng, Rng};
use crate::Tensor;

/// Fraction of dimensions active in a prototype or class-specific part.
const ACTIVE_PROB: f64 = 0.3;
/// Weight of the shared super-class prototype in each class semantic.
const PROTO_WEIGHT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub num_seen: usize,
    pub samples_per_class: usize,
    pub d_s: usize,
    pub d_v: usize,
    pub noise_scale: f64,
    pub seed: u64,
    pub num_superclasses: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            num_seen: 7,
            samples_per_class: 100,
            d_s: 32,
            d_v: 64,
            noise_scale: 0.1,
            seed: 0,
            num_superclasses: 3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_seen == 0 || self.num_seen >= self.num_classes {
            return Err(Error::Usage(format!(
                "need 0 < num_seen < num_classes, got {} of {}",
                self.num_seen, self.num_classes
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Usage(format!("noise_scale must be finite and >= 0, got {}", self.noise_scale)));
        }
        if self.samples_per_class == 0 || self.d_s == 0 || self.d_v == 0 || self.num_superclasses == 0 {
            return Err(Error::Usage("sizes must be positive".into()));
        }
        Ok(())
    }

    /// Sets `noise_scale` to `ratio` times the median distance between class means.
    ///
    /// The means depend only on the seed and sizes, so they are the same ones
    /// `generate_synthetic` will produce.
    pub fn with_relative_noise(mut self, ratio: f64) -> Result<Self> {
        self.noise_scale = 0.0;
        self.validate()?;
        let (_, _, means) = structure(&self, &mut seeded_rng(self.seed));
        self.noise_scale = ratio * median_mean_distance(&means);
        self.validate()?;
        Ok(self)
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// Ground-truth map `M` (d_s x d_v); class means are `alpha_c * M`.
    pub map: Tensor<f64>,
    pub class_means: Tensor<f64>,
    pub split: Split,
}

fn sparse_part(rng: &mut Rng, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d)
        .map(|_| if rng.random::<f64>() < ACTIVE_PROB { rng.random::<f64>() } else { 0.0 })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        let j = rng.random_range(0..d);
        v[j] = 0.5 + 0.5 * rng.random::<f64>();
    }
    v
}

/// Semantics, ground-truth map and class means, in that draw order.
fn structure(cfg: &SynthConfig, rng: &mut Rng) -> (Tensor<f64>, Tensor<f64>, Tensor<f64>) {
    let protos: Vec<Vec<f64>> = (0..cfg.num_superclasses).map(|_| sparse_part(rng, cfg.d_s)).collect();
    let mut rows = Vec::with_capacity(cfg.num_classes);
    for c in 0..cfg.num_classes {
        let own = sparse_part(rng, cfg.d_s);
        let mut a: Vec<f64> = protos[c % protos.len()].iter().zip(&own).map(|(p, o)| PROTO_WEIGHT * p + o).collect();
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        a.iter_mut().for_each(|v| *v /= norm);
        rows.push(a);
    }
    let alpha = Tensor::from_rows(&rows).expect("equal row lengths");
    let map: Tensor<f64> = gaussian_sample(rng, &[cfg.d_s, cfg.d_v]);
    let means = matmul(&alpha, &map).expect("conforming shapes");
    (alpha, map, means)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median Euclidean distance over all pairs of rows.
pub fn median_mean_distance(means: &Tensor<f64>) -> f64 {
    let c = means.rows();
    let mut d = Vec::with_capacity(c * c.saturating_sub(1) / 2);
    for i in 0..c {
        for j in i + 1..c {
            d.push(sq_dist(means.row(i), means.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

/// Lloyd's k-means with farthest-point initialization from row 0.
/// Cluster ids are renumbered by first appearance, so the result is canonical.
fn kmeans(x: &Tensor<f64>, k: usize) -> Vec<usize> {
    let n = x.rows();
    let k = k.min(n);
    let mut centres: Vec<Vec<f64>> = vec![x.row(0).to_vec()];
    while centres.len() < k {
        let far = (0..n)
            .map(|i| {
                let d = centres.iter().map(|c| sq_dist(x.row(i), c)).fold(f64::INFINITY, f64::min);
                (i, d)
            })
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        centres.push(x.row(far.0).to_vec());
    }
    let mut assign = vec![usize::MAX; n];
    for _ in 0..100 {
        let next: Vec<usize> = (0..n)
            .map(|i| {
                let mut best = (0, f64::INFINITY);
                for (j, c) in centres.iter().enumerate() {
                    let d = sq_dist(x.row(i), c);
                    if d < best.1 {
                        best = (j, d);
                    }
                }
                best.0
            })
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        for (j, c) in centres.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assign[i] == j).collect();
            if members.is_empty() {
                continue;
            }
            c.iter_mut().for_each(|v| *v = 0.0);
            for &i in &members {
                for (a, &v) in c.iter_mut().zip(x.row(i)) {
                    *a += v;
                }
            }
            let inv = 1.0 / members.len() as f64;
            c.iter_mut().for_each(|v| *v *= inv);
        }
    }
    let mut rename = vec![usize::MAX; k];
    let mut next_id = 0;
    assign
        .into_iter()
        .map(|a| {
            if rename[a] == usize::MAX {
                rename[a] = next_id;
                next_id += 1;
            }
            rename[a]
        })
        .collect()
}

/// Draws a dataset whose class means are a linear function of class semantics.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let (alpha, map, means) = structure(cfg, &mut rng);
    let n = cfg.num_classes * cfg.samples_per_class;
    let noise: Tensor<f64> = gaussian_sample(&mut rng, &[n, cfg.d_v]);
    let mut visual = Vec::with_capacity(n * cfg.d_v);
    let mut labels = Vec::with_capacity(n);
    for c in 0..cfg.num_classes {
        for s in 0..cfg.samples_per_class {
            let i = c * cfg.samples_per_class + s;
            visual.extend(means.row(c).iter().zip(noise.row(i)).map(|(m, e)| m + cfg.noise_scale * e));
            labels.push(c);
        }
    }
    let super_class = kmeans(&alpha, cfg.num_superclasses);
    let dataset = Dataset::new(
        Tensor::new(vec![n, cfg.d_v], visual)?,
        alpha,
        labels,
        (0..cfg.num_classes).map(|c| format!("class_{c:03}")).collect(),
        Some(super_class),
    )?;
    let unseen = cfg.num_classes - cfg.num_seen;
    let split = make_split(&dataset, SplitStyle::Scs, unseen as f64 / cfg.num_classes as f64, cfg.seed)?;
    debug_assert_eq!(split.unseen_classes.len(), unseen);
    Ok(SyntheticData {
        dataset,
        map,
        class_means: means,
        split,
    })
}
