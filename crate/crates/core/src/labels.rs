//! Spreader labels and class balancing.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::community::Role;
use crate::graph::NodeId;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Spreader,
    NonSpreader,
}

impl Label {
    /// Two-class one-hot target: `[1, 0]` spreader, `[0, 1]` non-spreader.
    pub fn one_hot(self) -> [f64; 2] {
        match self {
            Label::Spreader => [1.0, 0.0],
            Label::NonSpreader => [0.0, 1.0],
        }
    }

    pub fn is_spreader(self) -> bool {
        self == Label::Spreader
    }

    pub fn from_spreader(flag: bool) -> Self {
        if flag {
            Label::Spreader
        } else {
            Label::NonSpreader
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Spreader => "spreader",
            Label::NonSpreader => "non-spreader",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub node: NodeId,
    pub label: Label,
    pub role: Role,
}

/// `(spreaders, non_spreaders)`.
pub fn class_counts(examples: &[LabeledExample]) -> (usize, usize) {
    let spreaders = examples.iter().filter(|e| e.label.is_spreader()).count();
    (spreaders, examples.len() - spreaders)
}

/// Randomly drops majority-class examples until both classes have the size
/// of the minority. Surviving examples keep their original relative order.
pub fn undersample(examples: &[LabeledExample], seed_value: u64) -> Vec<LabeledExample> {
    let (pos, neg) = class_counts(examples);
    let keep = pos.min(neg);
    let majority = if pos > neg { Label::Spreader } else { Label::NonSpreader };
    let mut majority_idx: Vec<usize> = examples
        .iter()
        .enumerate()
        .filter(|(_, e)| e.label == majority)
        .map(|(i, _)| i)
        .collect();
    majority_idx.shuffle(&mut seed::rng(seed_value));
    let mut keep_flag = alloc::vec![true; examples.len()];
    for &i in &majority_idx[keep.min(majority_idx.len())..] {
        keep_flag[i] = false;
    }
    examples
        .iter()
        .zip(keep_flag)
        .filter(|(_, k)| *k)
        .map(|(e, _)| *e)
        .collect()
}
