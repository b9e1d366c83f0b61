use serde::{Deserialize, Serialize};

use super::knn::{check_refs, euclidean, macro_accuracy};
use crate::error::{dim_err, Error, Result};
use crate::Tensor;

/// Number of finite calibration offsets in the default grid.
pub const GAMMA_GRID_POINTS: usize = 199;
/// Percentile of absolute seen/unseen score gaps that bounds the default grid.
pub const GAMMA_PERCENTILE: f64 = 99.9;

/// Per-class scores of a set of test samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    /// Class id of each column.
    pub classes: Vec<usize>,
    /// Whether each column is a seen class.
    pub seen: Vec<bool>,
    /// `[samples x classes]`, higher is better.
    pub scores: Tensor<f64>,
}

impl ScoreMatrix {
    pub fn new(classes: Vec<usize>, seen: Vec<bool>, scores: Tensor<f64>) -> Result<Self> {
        let (_, c) = scores.dims2()?;
        if classes.len() != c || seen.len() != c {
            return Err(dim_err(
                "ScoreMatrix",
                format!("{c} score columns, {} classes, {} seen flags", classes.len(), seen.len()),
            ));
        }
        if !seen.iter().any(|&s| s) || seen.iter().all(|&s| s) {
            return Err(Error::Input("scores need both seen and unseen classes".into()));
        }
        Ok(Self { classes, seen, scores })
    }

    pub fn num_samples(&self) -> usize {
        self.scores.rows()
    }

    /// Predicted class of every sample after subtracting `gamma` from the
    /// seen-class scores. `gamma = +inf` excludes seen classes and
    /// `gamma = -inf` excludes unseen classes. Ties go to the first column.
    pub fn predict(&self, gamma: f64) -> Vec<usize> {
        (0..self.num_samples())
            .map(|i| {
                let row = self.scores.row(i);
                let mut best: Option<(usize, f64)> = None;
                for (j, (&s, &seen)) in row.iter().zip(&self.seen).enumerate() {
                    let v = match (seen, gamma) {
                        (true, g) if g == f64::INFINITY => continue,
                        (false, g) if g == f64::NEG_INFINITY => continue,
                        (true, g) if g.is_finite() => s - g,
                        _ => s,
                    };
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((j, v));
                    }
                }
                self.classes[best.expect("both class groups are non-empty").0]
            })
            .collect()
    }
}

/// Class score `-min distance` to the references of each class in `classes`.
pub fn nearest_reference_scores(
    refs: &Tensor<f64>,
    labels: &[usize],
    classes: &[usize],
    queries: &Tensor<f64>,
) -> Result<Tensor<f64>> {
    check_refs(refs, labels, queries)?;
    let col: std::collections::HashMap<usize, usize> = classes.iter().enumerate().map(|(j, &c)| (c, j)).collect();
    let mut per_ref = Vec::with_capacity(labels.len());
    for &l in labels {
        per_ref.push(
            *col.get(&l)
                .ok_or_else(|| Error::Input(format!("reference label {l} is not a scored class")))?,
        );
    }
    let mut out = Tensor::full(&[queries.rows(), classes.len()], f64::NEG_INFINITY);
    for q in 0..queries.rows() {
        let query = queries.row(q);
        let row = out.row_mut(q);
        for (i, &j) in per_ref.iter().enumerate() {
            let s = -euclidean(query, refs.row(i));
            if s > row[j] {
                row[j] = s;
            }
        }
    }
    if let Some(j) = (0..classes.len()).find(|&j| !per_ref.contains(&j)) {
        return Err(Error::Input(format!("class {} has no references", classes[j])));
    }
    Ok(out)
}

mod gamma_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => other.parse().map_err(serde::de::Error::custom),
            },
        }
    }
}

/// One operating point: unseen and seen macro accuracies at offset `gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuPoint {
    #[serde(with = "gamma_serde")]
    pub gamma: f64,
    pub unseen_acc: f64,
    pub seen_acc: f64,
}

/// Seen-unseen accuracy curve, in grid order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuCurve {
    pub points: Vec<SuPoint>,
}

impl SuCurve {
    /// CSV with columns gamma, unseen_acc, seen_acc.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(p).map_err(|e| Error::Corrupt(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Corrupt(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Corrupt(e.to_string()))
    }
}

fn percentile(values: &mut [f64], p: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
}

/// Both limits plus [`GAMMA_GRID_POINTS`] evenly spaced offsets spanning
/// plus and minus the [`GAMMA_PERCENTILE`] percentile of
/// `|max seen score - max unseen score|` over the samples.
pub fn default_gamma_grid(scores: &ScoreMatrix) -> Vec<f64> {
    let mut gaps: Vec<f64> = (0..scores.num_samples())
        .map(|i| {
            let row = scores.scores.row(i);
            let best = |want: bool| {
                row.iter()
                    .zip(&scores.seen)
                    .filter(|(_, &s)| s == want)
                    .map(|(&v, _)| v)
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            (best(true) - best(false)).abs()
        })
        .filter(|g| g.is_finite())
        .collect();
    let mut grid = vec![f64::NEG_INFINITY];
    let span = if gaps.is_empty() { 0.0 } else { percentile(&mut gaps, GAMMA_PERCENTILE) };
    if span > 0.0 {
        let step = 2.0 * span / (GAMMA_GRID_POINTS - 1) as f64;
        grid.extend((0..GAMMA_GRID_POINTS).map(|i| -span + step * i as f64));
    } else {
        grid.push(0.0);
    }
    grid.push(f64::INFINITY);
    grid
}

/// Accuracy trade-off over `gammas`. Unseen accuracy is measured on the
/// samples whose true class is unseen, seen accuracy on the rest; both are
/// averaged per class.
pub fn su_curve(scores: &ScoreMatrix, truth: &[usize], gammas: &[f64]) -> Result<SuCurve> {
    if gammas.is_empty() {
        return Err(Error::Usage("empty gamma grid".into()));
    }
    if truth.len() != scores.num_samples() {
        return Err(dim_err(
            "su_curve",
            format!("{} scored samples, {} labels", scores.num_samples(), truth.len()),
        ));
    }
    let mut is_unseen = Vec::with_capacity(truth.len());
    for &t in truth {
        let j = scores
            .classes
            .iter()
            .position(|&c| c == t)
            .ok_or_else(|| Error::Input(format!("true class {t} has no score column")))?;
        is_unseen.push(!scores.seen[j]);
    }
    let pick = |v: &[usize], want: bool| -> Vec<usize> {
        v.iter().zip(&is_unseen).filter(|(_, &u)| u == want).map(|(&x, _)| x).collect()
    };
    let (truth_u, truth_s) = (pick(truth, true), pick(truth, false));
    if truth_u.is_empty() || truth_s.is_empty() {
        return Err(Error::Input("test set needs both seen and unseen samples".into()));
    }
    let mut points = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let pred = scores.predict(gamma);
        points.push(SuPoint {
            gamma,
            unseen_acc: macro_accuracy(&pick(&pred, true), &truth_u)?,
            seen_acc: macro_accuracy(&pick(&pred, false), &truth_s)?,
        });
    }
    Ok(SuCurve { points })
}

/// Trapezoidal area under `(unseen, seen)` points.
///
/// Points are sorted by unseen accuracy (seen accuracy descending within
/// ties), and the polyline is extended horizontally to the seen axis and
/// vertically to the unseen axis.
pub fn ausuc_points(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Input(format!("AUSUC needs at least 2 points, got {}", points.len())));
    }
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut area = p[0].0 * p[0].1;
    for w in p.windows(2) {
        area += (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1);
    }
    Ok(area)
}

pub fn ausuc(curve: &SuCurve) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.unseen_acc, p.seen_acc)).collect();
    ausuc_points(&pts)
}
