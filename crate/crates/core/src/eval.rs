//! Regression and classification metrics, and chronological splits.

use std::fmt::Write as _;

use crate::activity::ActivityDecision;
use crate::domain::{ActivityLabel, NUM_ACTIVITIES};
use crate::error::{Error, Result};

fn check_pair(pred: usize, truth: usize) -> Result<()> {
    if pred != truth || pred == 0 {
        return Err(Error::DimensionMismatch {
            expected: truth,
            actual: pred,
        });
    }
    Ok(())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred.len(), truth.len())?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred.len(), truth.len())?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64)
}

/// One-vs-rest counts for one label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl LabelCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Whether the label occurs in the ground truth.
    pub fn present(&self) -> bool {
        self.tp + self.fn_ > 0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub per_label: [LabelCounts; NUM_ACTIVITIES],
}

impl ConfusionCounts {
    pub fn get(&self, label: ActivityLabel) -> &LabelCounts {
        &self.per_label[label.index()]
    }

    /// Mean recall over labels present in the ground truth.
    pub fn balanced_accuracy(&self) -> f64 {
        let present: Vec<&LabelCounts> = self.per_label.iter().filter(|c| c.present()).collect();
        if present.is_empty() {
            return 0.0;
        }
        present.iter().map(|c| c.recall()).sum::<f64>() / present.len() as f64
    }

    /// Per-label rows followed by a summary row:
    /// `label,tp,fp,fn,tn,precision,recall,f1,balanced_accuracy`.
    /// The summary carries count totals, macro averages over all labels and
    /// the balanced accuracy.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,tp,fp,fn,tn,precision,recall,f1,balanced_accuracy\n");
        let mut total = LabelCounts::default();
        let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
        for label in ActivityLabel::ALL {
            let c = self.get(label);
            let _ = writeln!(
                out,
                "{label},{},{},{},{},{:.6},{:.6},{:.6},",
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                c.precision(),
                c.recall(),
                c.f1()
            );
            total.tp += c.tp;
            total.fp += c.fp;
            total.fn_ += c.fn_;
            total.tn += c.tn;
            sp += c.precision();
            sr += c.recall();
            sf += c.f1();
        }
        let k = NUM_ACTIVITIES as f64;
        let _ = writeln!(
            out,
            "summary,{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            total.tp,
            total.fp,
            total.fn_,
            total.tn,
            sp / k,
            sr / k,
            sf / k,
            self.balanced_accuracy()
        );
        out
    }
}

pub fn confusion_from_labels(
    pred: &[ActivityLabel],
    truth: &[ActivityLabel],
) -> Result<ConfusionCounts> {
    check_pair(pred.len(), truth.len())?;
    let mut counts = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        for label in ActivityLabel::ALL {
            let c = &mut counts.per_label[label.index()];
            match (p == label, t == label) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(counts)
}

/// Counts over each decision's `current_status`.
pub fn confusion(
    decisions: &[ActivityDecision],
    truths: &[ActivityLabel],
) -> Result<ConfusionCounts> {
    let pred: Vec<ActivityLabel> = decisions.iter().map(|d| d.current_status).collect();
    confusion_from_labels(&pred, truths)
}

pub fn balanced_accuracy(decisions: &[ActivityDecision], truths: &[ActivityLabel]) -> Result<f64> {
    Ok(confusion(decisions, truths)?.balanced_accuracy())
}

pub const TRAIN_FRACTION: f64 = 0.8;
pub const MIN_SPLIT: usize = 5;

/// Size of the training prefix, `floor(0.8 * n)`.
pub fn train_len(n: usize) -> usize {
    (n * 4) / 5
}

/// Chronological split: the first `floor(0.8 N)` items train, the rest test.
pub fn split<T: Clone>(items: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    if items.len() < MIN_SPLIT {
        return Err(Error::TooFewInstances {
            found: items.len(),
            needed: MIN_SPLIT,
        });
    }
    let cut = train_len(items.len());
    Ok((items[..cut].to_vec(), items[cut..].to_vec()))
}

/// Applies [`split`] to each label's items separately (order preserved within
/// each label). Labels with fewer than five items go entirely to training.
pub fn split_by_label<T: Clone>(
    items: &[T],
    label: impl Fn(&T) -> ActivityLabel,
) -> (Vec<T>, Vec<T>) {
    let mut groups: [Vec<usize>; NUM_ACTIVITIES] = Default::default();
    for (i, item) in items.iter().enumerate() {
        groups[label(item).index()].push(i);
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for g in &groups {
        if g.len() < MIN_SPLIT {
            train_idx.extend_from_slice(g);
            continue;
        }
        let cut = train_len(g.len());
        train_idx.extend_from_slice(&g[..cut]);
        test_idx.extend_from_slice(&g[cut..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    (
        train_idx.into_iter().map(|i| items[i].clone()).collect(),
        test_idx.into_iter().map(|i| items[i].clone()).collect(),
    )
}

/// Most frequent label (lowest index on ties).
pub fn majority_label(labels: &[ActivityLabel]) -> Option<ActivityLabel> {
    let mut counts = [0usize; NUM_ACTIVITIES];
    labels.iter().for_each(|l| counts[l.index()] += 1);
    let best = (0..NUM_ACTIVITIES).max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))?;
    (counts[best] > 0).then(|| ActivityLabel::ALL[best])
}
