//! Cross-validation splits, spreader-class metrics and partition agreement.
//!
//! Examples are shuffled once and cut into ten deciles. Fold `i` tests on
//! decile `2i`, validates on decile `2i + 1` and trains on the other eight,
//! which gives an 80/10/10 split per fold and five disjoint test sets.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::labels::{class_counts, Label, LabeledExample};
use crate::seed;

pub const DECILES: usize = 10;
pub const MAX_FOLDS: usize = DECILES / 2;

#[derive(Clone, Debug, PartialEq)]
pub enum EvalError {
    InvalidPlan(&'static str),
    TooFewExamples {
        found: usize,
        required: usize,
    },
    SingleClassFold {
        fold: usize,
        spreaders: usize,
        non_spreaders: usize,
    },
    LengthMismatch {
        predicted: usize,
        truth: usize,
    },
    Empty,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::InvalidPlan(msg) => write!(f, "invalid split plan: {msg}"),
            EvalError::TooFewExamples { found, required } => {
                write!(f, "{found} labeled examples, at least {required} required")
            }
            EvalError::SingleClassFold {
                fold,
                spreaders,
                non_spreaders,
            } => write!(
                f,
                "fold {fold} training set is single-class ({spreaders} spreaders, {non_spreaders} non-spreaders)"
            ),
            EvalError::LengthMismatch { predicted, truth } => {
                write!(f, "{predicted} predictions for {truth} true labels")
            }
            EvalError::Empty => write!(f, "cannot compute metrics on an empty set"),
        }
    }
}

impl core::error::Error for EvalError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub folds: usize,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan { folds: 5, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold: usize,
    pub test_decile: usize,
    pub val_decile: usize,
    pub train: Vec<LabeledExample>,
    pub val: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

pub fn make_splits(examples: &[LabeledExample], plan: &SplitPlan) -> Result<Vec<FoldSplit>, EvalError> {
    if plan.folds == 0 || plan.folds > MAX_FOLDS {
        return Err(EvalError::InvalidPlan("fold count must be between 1 and 5"));
    }
    if examples.len() < DECILES {
        return Err(EvalError::TooFewExamples {
            found: examples.len(),
            required: DECILES,
        });
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut seed::rng(seed::derive(plan.seed, "splits")));
    let n = examples.len();
    let decile_of = |pos: usize| (pos * DECILES) / n;
    let mut deciles: Vec<Vec<LabeledExample>> = vec![Vec::new(); DECILES];
    for (pos, &i) in order.iter().enumerate() {
        deciles[decile_of(pos)].push(examples[i]);
    }

    (0..plan.folds)
        .map(|fold| {
            let test_decile = 2 * fold;
            let val_decile = (test_decile + 1) % DECILES;
            let train: Vec<LabeledExample> = deciles
                .iter()
                .enumerate()
                .filter(|(d, _)| *d != test_decile && *d != val_decile)
                .flat_map(|(_, xs)| xs.iter().copied())
                .collect();
            let (spreaders, non_spreaders) = class_counts(&train);
            if spreaders == 0 || non_spreaders == 0 {
                return Err(EvalError::SingleClassFold {
                    fold,
                    spreaders,
                    non_spreaders,
                });
            }
            Ok(FoldSplit {
                fold,
                test_decile,
                val_decile,
                train,
                val: deciles[val_decile].clone(),
                test: deciles[test_decile].clone(),
            })
        })
        .collect()
}

/// Confusion counts with the spreader class as positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.true_positive, self.true_positive + self.false_positive);
        let recall = ratio(self.true_positive, self.true_positive + self.false_negative);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            accuracy: ratio(self.true_positive + self.true_negative, self.total()),
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn mean(items: &[Metrics]) -> Metrics {
        if items.is_empty() {
            return Metrics::default();
        }
        let n = items.len() as f64;
        let sum = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Metrics {
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
        }
    }
}

pub fn confusion(predicted: &[Label], truth: &[Label]) -> Result<ConfusionCounts, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut c = ConfusionCounts::default();
    for (p, t) in predicted.iter().zip(truth) {
        match (p.is_spreader(), t.is_spreader()) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, true) => c.false_negative += 1,
            (false, false) => c.true_negative += 1,
        }
    }
    Ok(c)
}

pub fn compute_metrics(predicted: &[Label], truth: &[Label]) -> Result<(ConfusionCounts, Metrics), EvalError> {
    let c = confusion(predicted, truth)?;
    Ok((c, c.metrics()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub folds: Vec<FoldMetrics>,
    pub mean: Metrics,
}

impl MetricsReport {
    pub fn from_folds(folds: Vec<FoldMetrics>) -> Self {
        let per: Vec<Metrics> = folds.iter().map(|f| f.metrics).collect();
        MetricsReport {
            mean: Metrics::mean(&per),
            folds,
        }
    }
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

fn dense_counts(labels: &[u32]) -> Vec<usize> {
    let k = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut counts = vec![0usize; k];
    for &c in labels {
        counts[c as usize] += 1;
    }
    counts
}

/// Normalized mutual information `2 I(a; b) / (H(a) + H(b))`.
///
/// Two single-cluster labelings count as identical (1.0).
pub fn normalized_mutual_information(a: &[u32], b: &[u32]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            predicted: a.len(),
            truth: b.len(),
        });
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = a.len() as f64;
    let ca = dense_counts(a);
    let cb = dense_counts(b);
    let mut joint = alloc::collections::BTreeMap::<(u32, u32), usize>::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0) += 1;
    }
    let ha = entropy(ca.iter().copied(), n);
    let hb = entropy(cb.iter().copied(), n);
    if ha + hb == 0.0 {
        return Ok(1.0);
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            let px = ca[x as usize] as f64 / n;
            let py = cb[y as usize] as f64 / n;
            pxy * libm::log(pxy / (px * py))
        })
        .sum();
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::Role;
    use crate::graph::NodeId;

    fn examples(n: usize, every: usize) -> Vec<LabeledExample> {
        (0..n)
            .map(|i| LabeledExample {
                node: NodeId::new(i),
                label: Label::from_spreader(i % every == 0),
                role: Role::Boundary,
            })
            .collect()
    }

    #[test]
    fn hundred_examples_split_80_10_10() {
        let ex = examples(100, 3);
        let splits = make_splits(&ex, &SplitPlan { folds: 5, seed: 1 }).unwrap();
        assert_eq!(splits.len(), 5);
        for s in &splits {
            assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
            let mut all: Vec<NodeId> = s.train.iter().chain(&s.val).chain(&s.test).map(|e| e.node).collect();
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), 100);
        }
        assert_eq!(splits, make_splits(&ex, &SplitPlan { folds: 5, seed: 1 }).unwrap());
        assert_ne!(splits, make_splits(&ex, &SplitPlan { folds: 5, seed: 2 }).unwrap());
    }

    #[test]
    fn test_sets_are_disjoint_across_folds() {
        let ex = examples(100, 4);
        let splits = make_splits(&ex, &SplitPlan::default()).unwrap();
        let mut tested: Vec<NodeId> = splits.iter().flat_map(|s| s.test.iter().map(|e| e.node)).collect();
        assert_eq!(tested.len(), 50);
        tested.sort_unstable();
        tested.dedup();
        assert_eq!(tested.len(), 50);
    }

    #[test]
    fn uneven_sizes_cover_everything() {
        let ex = examples(37, 2);
        for s in make_splits(&ex, &SplitPlan::default()).unwrap() {
            assert_eq!(s.train.len() + s.val.len() + s.test.len(), 37);
            assert!(s.test.len() >= 3 && s.val.len() >= 3);
        }
    }

    #[test]
    fn refusals() {
        assert_eq!(
            make_splits(&examples(9, 2), &SplitPlan::default()),
            Err(EvalError::TooFewExamples { found: 9, required: 10 })
        );
        // one spreader only: some fold loses it from training
        let ex = examples(20, 100);
        assert!(matches!(
            make_splits(&ex, &SplitPlan::default()),
            Err(EvalError::SingleClassFold { .. })
        ));
        assert!(make_splits(&examples(20, 2), &SplitPlan { folds: 6, seed: 0 }).is_err());
    }

    #[test]
    fn hand_confusion_matrix() {
        let c = ConfusionCounts {
            true_positive: 3,
            false_positive: 1,
            false_negative: 2,
            true_negative: 4,
        };
        let m = c.metrics();
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.6).abs() < 1e-12);
        assert!((m.f1 - 2.0 * 0.45 / 1.35).abs() < 1e-12);
        assert!((m.accuracy - 0.7).abs() < 1e-12);
    }

    #[test]
    fn degenerate_predictors() {
        let truth = [Label::Spreader, Label::NonSpreader, Label::Spreader, Label::NonSpreader];
        let (_, m) = compute_metrics(&truth, &truth).unwrap();
        assert_eq!(
            m,
            Metrics {
                accuracy: 1.0,
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
        let none = [Label::NonSpreader; 4];
        let (c, m) = compute_metrics(&none, &truth).unwrap();
        assert_eq!(c.false_negative, 2);
        assert_eq!(
            m,
            Metrics {
                accuracy: 0.5,
                precision: 0.0,
                recall: 0.0,
                f1: 0.0
            }
        );
        assert!(compute_metrics(&none[..3], &truth).is_err());
        assert_eq!(compute_metrics(&[], &[]), Err(EvalError::Empty));
    }

    #[test]
    fn report_mean_is_fold_average() {
        let f = |fold, tp, tn| FoldMetrics {
            fold,
            counts: ConfusionCounts {
                true_positive: tp,
                true_negative: tn,
                false_positive: 1,
                false_negative: 1,
            },
            metrics: ConfusionCounts {
                true_positive: tp,
                true_negative: tn,
                false_positive: 1,
                false_negative: 1,
            }
            .metrics(),
        };
        let r = MetricsReport::from_folds(vec![f(0, 2, 5), f(1, 4, 3)]);
        let expected = (r.folds[0].metrics.accuracy + r.folds[1].metrics.accuracy) / 2.0;
        assert_eq!(r.mean.accuracy, expected);
    }

    #[test]
    fn nmi_values() {
        let a = [0, 0, 0, 1, 1, 1];
        assert!((normalized_mutual_information(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        // relabeling is irrelevant
        let b = [5, 5, 5, 2, 2, 2];
        assert!((normalized_mutual_information(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        // independent labeling
        let c = [0, 1, 0, 1, 0, 1];
        let v = normalized_mutual_information(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(normalized_mutual_information(&a, &c).unwrap() < 0.2);
        assert_eq!(normalized_mutual_information(&[0, 0], &[3, 3]).unwrap(), 1.0);
    }
}
