use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::ndmath::seeded_rng;

/// How unseen classes relate to super-classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitStyle {
    /// Super-category shared: unseen classes have seen siblings.
    #[serde(rename = "SCS")]
    Scs,
    /// Super-category exclusive: whole super-classes are held out.
    #[serde(rename = "SCE")]
    Sce,
}

impl std::str::FromStr for SplitStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SCS" => Ok(Self::Scs),
            "SCE" => Ok(Self::Sce),
            other => Err(Error::Input(format!("unknown split style {other:?}"))),
        }
    }
}

/// Disjoint seen and unseen class sets covering all classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub style: SplitStyle,
    pub seed: u64,
    pub seen_classes: Vec<usize>,
    pub unseen_classes: Vec<usize>,
}

impl Split {
    /// Checks the partition against a dataset's classes and super-classes.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let c = dataset.num_classes();
        let mut owner = vec![None; c];
        for (set, seen) in [(&self.seen_classes, true), (&self.unseen_classes, false)] {
            for &k in set {
                if k >= c {
                    return Err(Error::Input(format!("split names class {k}, dataset has {c}")));
                }
                if owner[k].replace(seen).is_some() {
                    return Err(Error::Input(format!("class {k} listed twice in split")));
                }
            }
        }
        if let Some(k) = owner.iter().position(Option::is_none) {
            return Err(Error::Input(format!("class {k} missing from split")));
        }
        if self.seen_classes.is_empty() || self.unseen_classes.is_empty() {
            return Err(Error::Input("split needs both seen and unseen classes".into()));
        }
        if self.style == SplitStyle::Sce {
            let sc = dataset
                .super_class
                .as_ref()
                .ok_or_else(|| Error::Input("SCE split needs super-class metadata".into()))?;
            let mut mixed: BTreeMap<usize, (bool, bool)> = BTreeMap::new();
            for k in 0..c {
                let e = mixed.entry(sc[k]).or_default();
                if owner[k] == Some(true) {
                    e.0 = true;
                } else {
                    e.1 = true;
                }
            }
            if let Some((s, _)) = mixed.iter().find(|(_, &(a, b))| a && b) {
                return Err(Error::Input(format!("super-class {s} has both seen and unseen classes")));
            }
        }
        Ok(())
    }
}

fn unseen_count(num_classes: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Usage(format!("unseen fraction {fraction} outside (0, 1)")));
    }
    if num_classes < 2 {
        return Err(Error::Input("need at least two classes to split".into()));
    }
    Ok(((num_classes as f64 * fraction).round() as usize).clamp(1, num_classes - 1))
}

/// Class-level seen/unseen partition by rule and seed.
///
/// SCS spreads unseen classes round-robin over super-classes and keeps a
/// seen member in every super-class that has two or more classes. SCE holds
/// out whole super-classes. Only class metadata is consulted, so the result
/// does not depend on sample order.
pub fn make_split(dataset: &Dataset, style: SplitStyle, unseen_fraction: f64, seed: u64) -> Result<Split> {
    let c = dataset.num_classes();
    let target = unseen_count(c, unseen_fraction)?;
    let mut rng = seeded_rng(seed);
    let super_class = dataset.super_class.clone();

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in 0..c {
        let g = super_class.as_ref().map_or(0, |sc| sc[k]);
        groups.entry(g).or_default().push(k);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.shuffle(&mut rng);
    for g in &mut groups {
        g.shuffle(&mut rng);
    }

    let mut unseen = Vec::with_capacity(target);
    match style {
        SplitStyle::Scs => {
            // Round-robin; the first pass respects the keep-one-seen rule.
            let mut taken = vec![0usize; groups.len()];
            for strict in [true, false] {
                let mut progress = true;
                while unseen.len() < target && progress {
                    progress = false;
                    for (g, members) in groups.iter().enumerate() {
                        if unseen.len() == target {
                            break;
                        }
                        let limit = if strict { members.len().saturating_sub(1) } else { members.len() };
                        if taken[g] < limit && unseen.len() + 1 < c {
                            unseen.push(members[taken[g]]);
                            taken[g] += 1;
                            progress = true;
                        }
                    }
                }
            }
        }
        SplitStyle::Sce => {
            if super_class.is_none() {
                return Err(Error::Input("SCE split needs super-class metadata".into()));
            }
            if groups.len() < 2 {
                return Err(Error::Input("SCE split needs at least two super-classes".into()));
            }
            let mut remaining_seen_groups = groups.len();
            for members in &groups {
                if unseen.len() >= target || remaining_seen_groups == 1 {
                    break;
                }
                let after = unseen.len() + members.len();
                if after.abs_diff(target) <= unseen.len().abs_diff(target) || unseen.is_empty() {
                    unseen.extend_from_slice(members);
                    remaining_seen_groups -= 1;
                }
            }
        }
    }
    unseen.sort_unstable();
    let seen = (0..c).filter(|k| unseen.binary_search(k).is_err()).collect();
    let split = Split {
        style,
        seed,
        seen_classes: seen,
        unseen_classes: unseen,
    };
    split.validate(dataset)?;
    Ok(split)
}

/// Sample partition used for training and generalized evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Holdout {
    /// Seen-class samples used for training.
    pub train: Vec<usize>,
    /// Held-out seen-class samples.
    pub seen_test: Vec<usize>,
    /// Every sample of an unseen class.
    pub unseen_test: Vec<usize>,
}

/// Holds out `fraction` of every seen class (at least one sample when the
/// class has two or more) as seen test data.
pub fn holdout_seen(dataset: &Dataset, split: &Split, fraction: f64, seed: u64) -> Result<Holdout> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Usage(format!("holdout fraction {fraction} outside [0, 1)")));
    }
    let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut train = Vec::new();
    let mut seen_test = Vec::new();
    for &k in &split.seen_classes {
        let mut idx = dataset.samples_of(k);
        if idx.is_empty() {
            return Err(Error::Input(format!("seen class {k} has no samples")));
        }
        idx.shuffle(&mut rng);
        let mut n_test = (idx.len() as f64 * fraction).round() as usize;
        if fraction > 0.0 && idx.len() >= 2 {
            n_test = n_test.clamp(1, idx.len() - 1);
        }
        seen_test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    seen_test.sort_unstable();
    let unseen_test = split
        .unseen_classes
        .iter()
        .flat_map(|&k| dataset.samples_of(k))
        .collect::<Vec<_>>();
    Ok(Holdout {
        train,
        seen_test,
        unseen_test,
    })
}
