//! One-dimensional threshold classifiers on the two trust features.
//!
//! Column 0 of the feature matrix is "trusting others" and column 1 is
//! "trusted by others". The interpolated baseline scores
//! `(1 - α)·x0 + α·x1` and searches `α` over a grid of step 0.05.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::graph::NodeId;
use crate::labels::{class_counts, Label, LabeledExample};

/// Number of grid steps for the interpolation weight.
pub const ALPHA_STEPS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    /// Threshold on column 0 only.
    Trusting,
    /// Threshold on column 1 only.
    Trusted,
    /// Threshold on a convex combination of both columns.
    Interpolation,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Trusting => "trusting",
            BaselineKind::Trusted => "trusted",
            BaselineKind::Interpolation => "interpolation",
        }
    }

    fn alphas(self) -> impl Iterator<Item = f64> {
        let (lo, hi) = match self {
            BaselineKind::Trusting => (0, 0),
            BaselineKind::Trusted => (ALPHA_STEPS, ALPHA_STEPS),
            BaselineKind::Interpolation => (0, ALPHA_STEPS),
        };
        (lo..=hi).map(|k| f64::from(k) / f64::from(ALPHA_STEPS))
    }
}

impl FromStr for BaselineKind {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trusting" => Ok(BaselineKind::Trusting),
            "trusted" => Ok(BaselineKind::Trusted),
            "interpolation" | "interp" => Ok(BaselineKind::Interpolation),
            _ => Err(BaselineError::UnknownKind),
        }
    }
}

/// Which side of the threshold is predicted spreader.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// `score > τ` is a spreader.
    Above,
    /// `score < τ` is a spreader.
    Below,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaselineError {
    InsufficientClass { spreaders: usize, non_spreaders: usize },
    InvalidNode(NodeId),
    NonFinite(NodeId),
    UnknownKind,
}

impl fmt::Display for BaselineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineError::InsufficientClass {
                spreaders,
                non_spreaders,
            } => write!(
                f,
                "threshold fitting needs both classes ({spreaders} spreaders, {non_spreaders} non-spreaders)"
            ),
            BaselineError::InvalidNode(v) => write!(f, "node {v} has no feature row"),
            BaselineError::NonFinite(v) => write!(f, "node {v} has a non-finite feature"),
            BaselineError::UnknownKind => write!(f, "baseline must be one of trusting, trusted, interpolation"),
        }
    }
}

impl core::error::Error for BaselineError {}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub kind: BaselineKind,
    /// Weight of column 1; 0 for `Trusting`, 1 for `Trusted`.
    pub alpha: f64,
    pub threshold: f64,
    pub polarity: Polarity,
    /// Accuracy on the data the model was fitted to.
    pub training_accuracy: f64,
}

impl ThresholdModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        interpolate(self.alpha, row)
    }

    pub fn classify(&self, score: f64) -> Label {
        Label::from_spreader(match self.polarity {
            Polarity::Above => score > self.threshold,
            Polarity::Below => score < self.threshold,
        })
    }
}

#[inline]
fn interpolate(alpha: f64, row: &[f64]) -> f64 {
    (1.0 - alpha) * row[0] + alpha * row[1]
}

#[derive(Clone, Copy)]
struct Candidate {
    correct: usize,
    threshold: f64,
    alpha: f64,
    polarity: Polarity,
}

impl Candidate {
    /// More correct, then smaller τ, then smaller α; `Above` wins exact ties.
    fn beats(&self, other: &Candidate) -> bool {
        match self.correct.cmp(&other.correct) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                self.threshold < other.threshold || (self.threshold == other.threshold && self.alpha < other.alpha)
            }
        }
    }
}

/// Best threshold for one fixed `alpha` via a sorted sweep.
///
/// Candidate thresholds are one below the minimum score and every midpoint
/// between consecutive distinct scores; with both polarities this covers
/// every achievable labeling by a strict threshold.
fn sweep(scored: &mut [(f64, bool)], alpha: f64) -> Candidate {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = scored.len();
    let total_pos = scored.iter().filter(|s| s.1).count();
    let total_neg = n - total_pos;
    let mut best: Option<Candidate> = None;
    let mut consider = |c: Candidate| {
        if best.as_ref().is_none_or(|b| c.beats(b)) {
            best = Some(c);
        }
    };
    // pos_below / neg_below count the first i scores (all < τ)
    let (mut pos_below, mut neg_below) = (0usize, 0usize);
    for i in 0..n {
        let threshold = if i == 0 {
            scored[0].0 - 1.0
        } else if scored[i - 1].0 < scored[i].0 {
            0.5 * (scored[i - 1].0 + scored[i].0)
        } else {
            f64::NAN
        };
        if !threshold.is_nan() {
            consider(Candidate {
                correct: neg_below + (total_pos - pos_below),
                threshold,
                alpha,
                polarity: Polarity::Above,
            });
            consider(Candidate {
                correct: pos_below + (total_neg - neg_below),
                threshold,
                alpha,
                polarity: Polarity::Below,
            });
        }
        if scored[i].1 {
            pos_below += 1;
        } else {
            neg_below += 1;
        }
    }
    best.expect("nonempty input")
}

fn feature_row(x: &FeatureMatrix, v: NodeId) -> Result<&[f64], BaselineError> {
    if v.index() >= x.node_count() {
        return Err(BaselineError::InvalidNode(v));
    }
    let row = x.row(v);
    if row.iter().any(|f| !f.is_finite()) {
        return Err(BaselineError::NonFinite(v));
    }
    Ok(row)
}

/// Fits the accuracy-maximizing threshold (and `α` for interpolation).
pub fn fit_threshold(
    train: &[LabeledExample],
    x: &FeatureMatrix,
    kind: BaselineKind,
) -> Result<ThresholdModel, BaselineError> {
    let (spreaders, non_spreaders) = class_counts(train);
    if spreaders == 0 || non_spreaders == 0 {
        return Err(BaselineError::InsufficientClass {
            spreaders,
            non_spreaders,
        });
    }
    let rows = train
        .iter()
        .map(|e| feature_row(x, e.node))
        .collect::<Result<Vec<_>, _>>()?;
    let mut scored = Vec::with_capacity(train.len());
    let mut best: Option<Candidate> = None;
    for alpha in kind.alphas() {
        scored.clear();
        scored.extend(
            rows.iter()
                .zip(train)
                .map(|(r, e)| (interpolate(alpha, r), e.label.is_spreader())),
        );
        let c = sweep(&mut scored, alpha);
        if best.as_ref().is_none_or(|b| c.beats(b)) {
            best = Some(c);
        }
    }
    let best = best.expect("alpha grid is nonempty");
    Ok(ThresholdModel {
        kind,
        alpha: best.alpha,
        threshold: best.threshold,
        polarity: best.polarity,
        training_accuracy: best.correct as f64 / train.len() as f64,
    })
}

pub fn predict_threshold(
    model: &ThresholdModel,
    x: &FeatureMatrix,
    nodes: &[NodeId],
) -> Result<Vec<Label>, BaselineError> {
    nodes
        .iter()
        .map(|&v| Ok(model.classify(model.score(feature_row(x, v)?))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::Role;
    use crate::features::FeatureStrategy;
    use crate::seed;
    use rand::Rng;

    fn dataset(rows: &[[f64; 2]], labels: &[bool]) -> (FeatureMatrix, Vec<LabeledExample>) {
        let x = FeatureMatrix::from_rows(FeatureStrategy::Topology, rows);
        let ex = labels
            .iter()
            .enumerate()
            .map(|(i, &s)| LabeledExample {
                node: NodeId::new(i),
                label: Label::from_spreader(s),
                role: Role::Boundary,
            })
            .collect();
        (x, ex)
    }

    fn accuracy(m: &ThresholdModel, x: &FeatureMatrix, ex: &[LabeledExample]) -> f64 {
        let nodes: Vec<NodeId> = ex.iter().map(|e| e.node).collect();
        let pred = predict_threshold(m, x, &nodes).unwrap();
        pred.iter().zip(ex).filter(|(p, e)| **p == e.label).count() as f64 / ex.len() as f64
    }

    #[test]
    fn separable_data_is_fit_perfectly() {
        let (x, ex) = dataset(
            &[[0.9, 0.0], [0.9, 0.0], [0.1, 0.0], [0.1, 0.0], [0.1, 0.0]],
            &[true, true, false, false, false],
        );
        let m = fit_threshold(&ex, &x, BaselineKind::Trusting).unwrap();
        assert_eq!(m.training_accuracy, 1.0);
        assert_eq!(m.polarity, Polarity::Above);
        assert!((m.threshold - 0.5).abs() < 1e-12);
        assert_eq!(accuracy(&m, &x, &ex), 1.0);
        // reversed relationship learns the other polarity
        let (x, ex) = dataset(&[[0.9, 0.0], [0.1, 0.0]], &[false, true]);
        let m = fit_threshold(&ex, &x, BaselineKind::Trusting).unwrap();
        assert_eq!(m.polarity, Polarity::Below);
        assert_eq!(m.training_accuracy, 1.0);
    }

    #[test]
    fn exact_threshold_is_non_spreader() {
        let m = ThresholdModel {
            kind: BaselineKind::Trusting,
            alpha: 0.0,
            threshold: 0.4,
            polarity: Polarity::Above,
            training_accuracy: 1.0,
        };
        assert_eq!(m.classify(0.4), Label::NonSpreader);
        let below = ThresholdModel {
            polarity: Polarity::Below,
            ..m
        };
        assert_eq!(below.classify(0.4), Label::NonSpreader);
    }

    #[test]
    fn single_class_refused() {
        let (x, ex) = dataset(&[[0.1, 0.2], [0.3, 0.4]], &[true, true]);
        assert_eq!(
            fit_threshold(&ex, &x, BaselineKind::Trusted),
            Err(BaselineError::InsufficientClass {
                spreaders: 2,
                non_spreaders: 0
            })
        );
    }

    /// Brute force over every midpoint (and below-min) for one score vector.
    fn exhaustive(scores: &[f64], labels: &[bool]) -> (usize, f64) {
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut cands = alloc::vec![sorted[0] - 1.0];
        cands.extend(sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        let mut best = (0usize, f64::INFINITY);
        for &t in &cands {
            for above in [true, false] {
                let correct = scores
                    .iter()
                    .zip(labels)
                    .filter(|(&s, &l)| (if above { s > t } else { s < t }) == l)
                    .count();
                if correct > best.0 || (correct == best.0 && t < best.1) {
                    best = (correct, t);
                }
            }
        }
        best
    }

    #[test]
    fn sweep_matches_exhaustive_search() {
        let mut rng = seed::rng(17);
        for trial in 0..200 {
            let n = rng.gen_range(2..25);
            let rows: Vec<[f64; 2]> = (0..n)
                .map(|_| [f64::from(rng.gen_range(0..6u32)) / 5.0, rng.gen::<f64>()])
                .collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            labels[0] = true;
            labels[1] = false;
            let (x, ex) = dataset(&rows, &labels);
            let m = fit_threshold(&ex, &x, BaselineKind::Trusting).unwrap();
            let scores: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let (correct, tau) = exhaustive(&scores, &labels);
            assert_eq!(m.training_accuracy, correct as f64 / n as f64, "trial {trial}");
            assert_eq!(m.threshold, tau, "trial {trial}");
            assert_eq!(accuracy(&m, &x, &ex), m.training_accuracy);
        }
    }

    #[test]
    fn interpolation_endpoints_and_dominance() {
        let mut rng = seed::rng(5);
        for _ in 0..100 {
            let n = rng.gen_range(4..40);
            let rows: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
            labels[0] = true;
            labels[1] = false;
            let (x, ex) = dataset(&rows, &labels);
            let a = fit_threshold(&ex, &x, BaselineKind::Trusting).unwrap();
            let b = fit_threshold(&ex, &x, BaselineKind::Trusted).unwrap();
            let c = fit_threshold(&ex, &x, BaselineKind::Interpolation).unwrap();
            assert!(c.training_accuracy >= a.training_accuracy.max(b.training_accuracy));
            assert_eq!(a.alpha, 0.0);
            assert_eq!(b.alpha, 1.0);

            // α = 0 and α = 1 interpolated models decide like the single-feature ones
            let nodes: Vec<NodeId> = ex.iter().map(|e| e.node).collect();
            let at0 = ThresholdModel {
                kind: BaselineKind::Interpolation,
                ..a
            };
            assert_eq!(
                predict_threshold(&at0, &x, &nodes).unwrap(),
                predict_threshold(&a, &x, &nodes).unwrap()
            );
            let at1 = ThresholdModel {
                kind: BaselineKind::Interpolation,
                ..b
            };
            assert_eq!(
                predict_threshold(&at1, &x, &nodes).unwrap(),
                predict_threshold(&b, &x, &nodes).unwrap()
            );
        }
    }

    #[test]
    fn doubling_features_preserves_labels() {
        let mut rng = seed::rng(9);
        for _ in 0..50 {
            let n = rng.gen_range(4..30);
            let rows: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            labels[0] = true;
            labels[1] = false;
            let (x, ex) = dataset(&rows, &labels);
            let x2 = x.scaled(2.0);
            let nodes: Vec<NodeId> = ex.iter().map(|e| e.node).collect();
            for kind in [
                BaselineKind::Trusting,
                BaselineKind::Trusted,
                BaselineKind::Interpolation,
            ] {
                let m1 = fit_threshold(&ex, &x, kind).unwrap();
                let m2 = fit_threshold(&ex, &x2, kind).unwrap();
                assert_eq!(
                    predict_threshold(&m1, &x, &nodes).unwrap(),
                    predict_threshold(&m2, &x2, &nodes).unwrap()
                );
            }
        }
    }

    #[test]
    fn kind_parses() {
        assert_eq!(
            "interpolation".parse::<BaselineKind>().unwrap(),
            BaselineKind::Interpolation
        );
        assert!("line".parse::<BaselineKind>().is_err());
    }
}
