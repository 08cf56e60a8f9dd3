//! Boosted, robustness-weighted misclassification gain.
//!
//! Each sample contributes mass `w_i·|ρ(φ, s_i)|`. Partition weights are the
//! share of mass on the satisfying (`⊤`) and violating (`⊥`) side, class
//! weights the share of mass per label, and the misclassification rate of a
//! set is its minority class share, renormalized within that set.

use crate::dataset::{Label, LabeledDataset, SampleWeights};
use crate::error::StlError;
use crate::formula::Formula;
use crate::robustness::{capped, check_compatible, eval};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionScore {
    pub p_top: f64,
    pub p_bot: f64,
    pub p_positive: f64,
    pub p_negative: f64,
    /// Misclassification rate of the whole set.
    pub mr: f64,
    pub gain: f64,
    /// Total robustness mass `Σ w_i·|ρ_i|`.
    pub margin: f64,
    /// Every sample had zero robustness mass; `gain` is then 0 by convention.
    pub degenerate: bool,
}

#[derive(Default, Clone, Copy)]
struct Masses {
    positive: f64,
    negative: f64,
}

impl Masses {
    fn add(&mut self, label: Label, m: f64) {
        match label {
            Label::Positive => self.positive += m,
            Label::Negative => self.negative += m,
        }
    }

    fn total(&self) -> f64 {
        self.positive + self.negative
    }

    fn misclassification_rate(&self) -> f64 {
        let total = self.total();
        if total > 0.0 {
            self.positive.min(self.negative) / total
        } else {
            0.0
        }
    }
}

/// Scores a split from per-sample `(label, weight, robustness)` triples.
/// Samples with `ρ >= 0` fall on the `⊤` side.
pub fn score_split(samples: impl IntoIterator<Item = (Label, f64, f64)>) -> PartitionScore {
    let (mut all, mut top, mut bot) = (Masses::default(), Masses::default(), Masses::default());
    for (label, w, rho) in samples {
        let m = w * capped(rho).abs();
        all.add(label, m);
        if rho >= 0.0 {
            top.add(label, m);
        } else {
            bot.add(label, m);
        }
    }
    let total = all.total();
    if total <= 0.0 {
        return PartitionScore {
            p_top: 0.0,
            p_bot: 0.0,
            p_positive: 0.0,
            p_negative: 0.0,
            mr: 0.0,
            gain: 0.0,
            margin: 0.0,
            degenerate: true,
        };
    }
    let p_top = top.total() / total;
    let p_bot = bot.total() / total;
    let mr = all.misclassification_rate();
    let gain = mr - p_top * top.misclassification_rate() - p_bot * bot.misclassification_rate();
    PartitionScore {
        p_top,
        p_bot,
        p_positive: all.positive / total,
        p_negative: all.negative / total,
        mr,
        gain,
        margin: total,
        degenerate: false,
    }
}

fn robustness_of(dataset: &LabeledDataset, members: &[usize], formula: &Formula) -> Result<Vec<f64>, StlError> {
    if let Some(&i) = members.first() {
        check_compatible(formula, dataset.signal(i), 0)?;
    }
    Ok(members
        .iter()
        .map(|&i| eval(formula, dataset.signal(i).rows(), 0))
        .collect())
}

/// Splits `members` into those satisfying `formula` and the rest.
pub fn partition(
    dataset: &LabeledDataset,
    members: &[usize],
    formula: &Formula,
) -> Result<(Vec<usize>, Vec<usize>), StlError> {
    let rho = robustness_of(dataset, members, formula)?;
    let mut top = Vec::new();
    let mut bot = Vec::new();
    for (&i, r) in members.iter().zip(rho) {
        if r >= 0.0 {
            top.push(i);
        } else {
            bot.push(i);
        }
    }
    Ok((top, bot))
}

/// Misclassification gain of splitting `members` by `formula`.
pub fn misclassification_gain(
    dataset: &LabeledDataset,
    weights: &SampleWeights,
    members: &[usize],
    formula: &Formula,
) -> Result<PartitionScore, StlError> {
    let rho = robustness_of(dataset, members, formula)?;
    Ok(score_split(
        members
            .iter()
            .zip(rho)
            .map(|(&i, r)| (dataset.label(i), weights.get(i), r)),
    ))
}

/// Label with the larger robustness-weighted mass under the path formula.
/// Falls back to boosting weight, then to counts, when masses vanish; ties
/// go to [`Label::Positive`].
pub fn best_leaf_label(
    dataset: &LabeledDataset,
    weights: &SampleWeights,
    members: &[usize],
    path: &Formula,
) -> Result<Label, StlError> {
    let rho = robustness_of(dataset, members, path)?;
    let pick = |m: Masses| {
        if m.positive >= m.negative {
            Label::Positive
        } else {
            Label::Negative
        }
    };
    let mut robust = Masses::default();
    let mut plain = Masses::default();
    let mut counts = Masses::default();
    for (&i, r) in members.iter().zip(rho) {
        let l = dataset.label(i);
        robust.add(l, weights.get(i) * capped(r).abs());
        plain.add(l, weights.get(i));
        counts.add(l, 1.0);
    }
    Ok(if robust.total() > 0.0 {
        pick(robust)
    } else if plain.total() > 0.0 {
        pick(plain)
    } else {
        pick(counts)
    })
}
