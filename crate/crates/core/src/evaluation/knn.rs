use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{dim_err, Error, Result};
use crate::Tensor;

pub(crate) fn check_refs(refs: &Tensor<f64>, labels: &[usize], queries: &Tensor<f64>) -> Result<()> {
    let (n, d) = refs.dims2()?;
    if n == 0 {
        return Err(Error::Input("empty reference set".into()));
    }
    if labels.len() != n {
        return Err(dim_err("knn", format!("{n} references, {} labels", labels.len())));
    }
    let (_, dq) = queries.dims2()?;
    if dq != d {
        return Err(dim_err("knn", format!("queries have {dq} columns, references {d}")));
    }
    Ok(())
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn by_distance_then_label(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// k-nearest-neighbour vote by Euclidean distance.
///
/// Ties in the vote go to the label with the smallest summed neighbour
/// distance, then to the lowest label. Neighbours at equal distance are
/// taken in label order, so the result does not depend on the order of the
/// references.
pub fn knn_classify(refs: &Tensor<f64>, labels: &[usize], queries: &Tensor<f64>, k: usize) -> Result<Vec<usize>> {
    check_refs(refs, labels, queries)?;
    let n = refs.rows();
    if k == 0 || k > n {
        return Err(Error::Usage(format!("k = {k} must lie in 1..={n}")));
    }
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(queries.rows());
    for q in 0..queries.rows() {
        let query = queries.row(q);
        dists.clear();
        dists.extend((0..n).map(|i| (euclidean(query, refs.row(i)), labels[i])));
        if k < n {
            dists.select_nth_unstable_by(k - 1, by_distance_then_label);
        }
        let nearest = &mut dists[..k];
        nearest.sort_unstable_by(by_distance_then_label);
        let mut votes: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        for &(d, l) in nearest.iter() {
            let e = votes.entry(l).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += d;
        }
        let (&best, _) = votes
            .iter()
            .min_by(|(la, a), (lb, b)| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)).then(la.cmp(lb)))
            .expect("k >= 1");
        out.push(best);
    }
    Ok(out)
}

/// Fraction of exact matches.
pub fn top1(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(dim_err(
            "top1",
            format!("{} predictions, {} labels", predictions.len(), truth.len()),
        ));
    }
    if truth.is_empty() {
        return Err(Error::Input("top1 of an empty set".into()));
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Per-class accuracy averaged over the classes present in `truth`.
pub fn macro_accuracy(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(dim_err(
            "macro_accuracy",
            format!("{} predictions, {} labels", predictions.len(), truth.len()),
        ));
    }
    if truth.is_empty() {
        return Err(Error::Input("accuracy of an empty set".into()));
    }
    let mut per: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (&p, &t) in predictions.iter().zip(truth) {
        let e = per.entry(t).or_default();
        e.0 += usize::from(p == t);
        e.1 += 1;
    }
    Ok(per.values().map(|&(h, n)| h as f64 / n as f64).sum::<f64>() / per.len() as f64)
}
