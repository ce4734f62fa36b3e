//! Node features and per-node sampling distributions.
//!
//! | strategy | edge weight for sampling      | "trusting others"     | "trusted by others"        |
//! |----------|-------------------------------|-----------------------|----------------------------|
//! | `top`    | believability of the edge     | `ti(x)`               | `tw(x)`                    |
//! | `act`    | retweet count on the edge     | retweets / timeline   | times retweeted / timeline |

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{DirectedGraph, NodeId};
use crate::tsm::{BelievabilityScores, TrustScores};

/// Feature dimension produced by every strategy.
pub const FEATURE_DIM: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureError {
    MissingActivity,
    ScoreLengthMismatch { scores: usize, node_count: usize },
    WeightLengthMismatch { weights: usize, edge_count: usize },
    NegativeWeight { edge: usize, weight: f64 },
    InvalidRecord { node: NodeId, reason: &'static str },
    UnknownStrategy,
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::MissingActivity => write!(f, "activity strategy requires an activity table"),
            FeatureError::ScoreLengthMismatch { scores, node_count } => {
                write!(f, "trust scores cover {scores} nodes, expected {node_count}")
            }
            FeatureError::WeightLengthMismatch { weights, edge_count } => {
                write!(f, "{weights} raw edge weights for {edge_count} edges")
            }
            FeatureError::NegativeWeight { edge, weight } => {
                write!(f, "edge {edge} has negative raw weight {weight}")
            }
            FeatureError::InvalidRecord { node, reason } => write!(f, "activity record for node {node}: {reason}"),
            FeatureError::UnknownStrategy => write!(f, "strategy must be one of top, act"),
        }
    }
}

impl core::error::Error for FeatureError {}

/// Which trust signal a feature matrix or edge weighting is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureStrategy {
    #[serde(rename = "top")]
    Topology,
    #[serde(rename = "act")]
    Activity,
}

impl FeatureStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureStrategy::Topology => "top",
            FeatureStrategy::Activity => "act",
        }
    }
}

impl FromStr for FeatureStrategy {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "top" | "topology" => Ok(FeatureStrategy::Topology),
            "act" | "activity" => Ok(FeatureStrategy::Activity),
            _ => Err(FeatureError::UnknownStrategy),
        }
    }
}

/// Timeline summary for one node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub node: NodeId,
    /// Number of timeline statuses collected, `n(t)`.
    pub timeline_size: u32,
    /// Statuses on the timeline that are retweets.
    pub retweet_count: u32,
    /// Sum over the timeline of the retweet counts each status received.
    pub times_retweeted_total: f64,
}

impl ActivityRecord {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.retweet_count > self.timeline_size {
            return Err(FeatureError::InvalidRecord {
                node: self.node,
                reason: "retweet_count exceeds timeline_size",
            });
        }
        if !(self.times_retweeted_total.is_finite() && self.times_retweeted_total >= 0.0) {
            return Err(FeatureError::InvalidRecord {
                node: self.node,
                reason: "times_retweeted_total must be finite and nonnegative",
            });
        }
        Ok(())
    }
}

/// `retweeted` was retweeted `count` times by `retweeter`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetweetPair {
    pub retweeted: NodeId,
    pub retweeter: NodeId,
    pub count: u32,
}

/// Per-node activity plus optional pairwise retweet counts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActivityTable {
    records: Vec<Option<ActivityRecord>>,
    pub pairs: Vec<RetweetPair>,
}

impl ActivityTable {
    pub fn new(node_count: usize) -> Self {
        ActivityTable {
            records: vec![None; node_count],
            pairs: Vec::new(),
        }
    }

    pub fn insert(&mut self, record: ActivityRecord) -> Result<(), FeatureError> {
        record.validate()?;
        let i = record.node.index();
        if i >= self.records.len() {
            self.records.resize(i + 1, None);
        }
        self.records[i] = Some(record);
        Ok(())
    }

    pub fn get(&self, v: NodeId) -> Option<&ActivityRecord> {
        self.records.get(v.index()).and_then(Option::as_ref)
    }

    pub fn records(&self) -> impl Iterator<Item = &ActivityRecord> {
        self.records.iter().flatten()
    }

    /// Raw act-mode edge weights indexed by edge id.
    ///
    /// A pair "x retweeted by v" lands on the follow edge `v -> x`. Returns
    /// the weights and the number of pairs with no matching edge.
    pub fn edge_weights(&self, g: &DirectedGraph) -> (Vec<f64>, usize) {
        let mut weights = vec![0.0; g.edge_count()];
        let mut unmatched = 0;
        for pair in &self.pairs {
            match g.find_edge(pair.retweeter, pair.retweeted) {
                Some(e) => weights[e] += f64::from(pair.count),
                None => unmatched += 1,
            }
        }
        (weights, unmatched)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub strategy: FeatureStrategy,
    /// Row-major, `FEATURE_DIM` columns per node.
    data: Vec<f64>,
    /// Nodes whose row was zero-filled (empty timeline or no record).
    pub flagged: Vec<NodeId>,
    pub missing_records: usize,
}

impl FeatureMatrix {
    pub fn from_rows(strategy: FeatureStrategy, rows: &[[f64; FEATURE_DIM]]) -> Self {
        FeatureMatrix {
            strategy,
            data: rows.iter().flatten().copied().collect(),
            flagged: Vec::new(),
            missing_records: 0,
        }
    }

    #[inline]
    pub fn row(&self, v: NodeId) -> &[f64] {
        &self.data[v.index() * FEATURE_DIM..(v.index() + 1) * FEATURE_DIM]
    }

    pub fn node_count(&self) -> usize {
        self.data.len() / FEATURE_DIM
    }

    pub fn dim(&self) -> usize {
        FEATURE_DIM
    }

    /// Returns a copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> FeatureMatrix {
        FeatureMatrix {
            data: self.data.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }
}

pub fn build_features(
    scores: &TrustScores,
    activity: Option<&ActivityTable>,
    strategy: FeatureStrategy,
    node_count: usize,
) -> Result<FeatureMatrix, FeatureError> {
    let mut data = Vec::with_capacity(node_count * FEATURE_DIM);
    let mut flagged = Vec::new();
    let mut missing_records = 0;
    match strategy {
        FeatureStrategy::Topology => {
            if scores.ti.len() != node_count || scores.tw.len() != node_count {
                return Err(FeatureError::ScoreLengthMismatch {
                    scores: scores.ti.len().min(scores.tw.len()),
                    node_count,
                });
            }
            for v in 0..node_count {
                data.push(scores.ti[v]);
                data.push(scores.tw[v]);
            }
        }
        FeatureStrategy::Activity => {
            let table = activity.ok_or(FeatureError::MissingActivity)?;
            for v in 0..node_count {
                let node = NodeId::new(v);
                match table.get(node) {
                    Some(r) if r.timeline_size > 0 => {
                        let n_t = f64::from(r.timeline_size);
                        data.push(f64::from(r.retweet_count) / n_t);
                        data.push(r.times_retweeted_total / n_t);
                    }
                    Some(_) => {
                        flagged.push(node);
                        data.extend_from_slice(&[0.0; FEATURE_DIM]);
                    }
                    None => {
                        missing_records += 1;
                        flagged.push(node);
                        data.extend_from_slice(&[0.0; FEATURE_DIM]);
                    }
                }
            }
        }
    }
    Ok(FeatureMatrix {
        strategy,
        data,
        flagged,
        missing_records,
    })
}

/// Which adjacency a sampling distribution is built over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleDirection {
    /// Followees: `v -> x`.
    #[default]
    Out,
    /// Followers: `x -> v`.
    In,
}

/// Where the raw edge weights came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    Believability,
    RetweetCounts,
    Graph,
}

/// Normalized neighbor distribution for every node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingWeights {
    pub source: WeightSource,
    pub direction: SampleDirection,
    offsets: Vec<usize>,
    /// All candidate neighbors per node, ascending.
    targets: Vec<NodeId>,
    /// Normalized probability per candidate; zero everywhere for zero-mass nodes.
    probs: Vec<f64>,
    has_mass: Vec<bool>,
    /// Nodes with at least one candidate but zero total weight.
    pub flagged: Vec<NodeId>,
}

impl SamplingWeights {
    pub fn node_count(&self) -> usize {
        self.has_mass.len()
    }

    /// Every candidate neighbor of `v`, regardless of weight.
    pub fn candidates(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v.index()]..self.offsets[v.index() + 1]]
    }

    /// `(targets, probabilities)`; both empty when `v` carries no weight.
    pub fn distribution(&self, v: NodeId) -> (&[NodeId], &[f64]) {
        if !self.has_mass[v.index()] {
            return (&[], &[]);
        }
        let r = self.offsets[v.index()]..self.offsets[v.index() + 1];
        (&self.targets[r.clone()], &self.probs[r])
    }

    pub fn probability(&self, src: NodeId, dst: NodeId) -> Option<f64> {
        let (targets, probs) = self.distribution(src);
        targets.binary_search(&dst).ok().map(|i| probs[i])
    }
}

fn check_raw(g: &DirectedGraph, raw: &[f64]) -> Result<(), FeatureError> {
    if raw.len() != g.edge_count() {
        return Err(FeatureError::WeightLengthMismatch {
            weights: raw.len(),
            edge_count: g.edge_count(),
        });
    }
    if let Some((edge, &weight)) = raw.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(FeatureError::NegativeWeight { edge, weight });
    }
    Ok(())
}

fn normalize_rows<'a, F, I>(
    g: &'a DirectedGraph,
    source: WeightSource,
    direction: SampleDirection,
    rows: F,
) -> SamplingWeights
where
    F: Fn(NodeId) -> (&'a [NodeId], I),
    I: Iterator<Item = f64>,
{
    let n = g.node_count();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut targets = Vec::new();
    let mut probs = Vec::new();
    let mut has_mass = vec![false; n];
    let mut flagged = Vec::new();
    for v in g.nodes() {
        let (nbrs, weights) = rows(v);
        let start = probs.len();
        targets.extend_from_slice(nbrs);
        probs.extend(weights);
        let total: f64 = probs[start..].iter().sum();
        if total > 0.0 {
            has_mass[v.index()] = true;
            for p in &mut probs[start..] {
                *p /= total;
            }
        } else if !nbrs.is_empty() {
            flagged.push(v);
        }
        offsets.push(targets.len());
    }
    SamplingWeights {
        source,
        direction,
        offsets,
        targets,
        probs,
        has_mass,
        flagged,
    }
}

/// Divides each node's out-edge weights by their sum.
pub fn normalize_out_weights(
    g: &DirectedGraph,
    raw: &[f64],
    source: WeightSource,
) -> Result<SamplingWeights, FeatureError> {
    check_raw(g, raw)?;
    Ok(normalize_rows(g, source, SampleDirection::Out, |v| {
        (g.out_targets(v), raw[g.out_edge_ids(v)].iter().copied())
    }))
}

/// Divides each node's in-edge weights by their sum.
pub fn normalize_in_weights(
    g: &DirectedGraph,
    raw: &[f64],
    source: WeightSource,
) -> Result<SamplingWeights, FeatureError> {
    check_raw(g, raw)?;
    Ok(normalize_rows(g, source, SampleDirection::In, |v| {
        (g.in_sources(v), g.in_edge_ids(v).iter().map(|&e| raw[e]))
    }))
}

pub fn normalize_weights(
    g: &DirectedGraph,
    raw: &[f64],
    source: WeightSource,
    direction: SampleDirection,
) -> Result<SamplingWeights, FeatureError> {
    match direction {
        SampleDirection::Out => normalize_out_weights(g, raw, source),
        SampleDirection::In => normalize_in_weights(g, raw, source),
    }
}

/// Sampling distribution over believability (`top`).
pub fn believability_weights(
    g: &DirectedGraph,
    bel: &BelievabilityScores,
    direction: SampleDirection,
) -> Result<SamplingWeights, FeatureError> {
    normalize_weights(g, bel.values(), WeightSource::Believability, direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(ti: &[f64], tw: &[f64]) -> TrustScores {
        TrustScores {
            ti: ti.to_vec(),
            tw: tw.to_vec(),
            iterations_run: 1,
            converged: true,
        }
    }

    #[test]
    fn activity_features_from_timeline() {
        let mut table = ActivityTable::new(2);
        table
            .insert(ActivityRecord {
                node: NodeId(0),
                timeline_size: 10,
                retweet_count: 4,
                times_retweeted_total: 20.0,
            })
            .unwrap();
        table
            .insert(ActivityRecord {
                node: NodeId(1),
                timeline_size: 0,
                retweet_count: 0,
                times_retweeted_total: 0.0,
            })
            .unwrap();
        let x = build_features(
            &scores(&[0.0; 2], &[0.0; 2]),
            Some(&table),
            FeatureStrategy::Activity,
            2,
        )
        .unwrap();
        assert_eq!(x.row(NodeId(0)), &[0.4, 2.0]);
        assert_eq!(x.row(NodeId(1)), &[0.0, 0.0]);
        assert_eq!(x.flagged, vec![NodeId(1)]);
        assert_eq!(x.missing_records, 0);
    }

    #[test]
    fn missing_records_zero_filled() {
        let table = ActivityTable::new(1);
        let x = build_features(&scores(&[0.0], &[0.0]), Some(&table), FeatureStrategy::Activity, 1).unwrap();
        assert_eq!(x.row(NodeId(0)), &[0.0, 0.0]);
        assert_eq!(x.missing_records, 1);
        assert_eq!(
            build_features(&scores(&[0.0], &[0.0]), None, FeatureStrategy::Activity, 1),
            Err(FeatureError::MissingActivity)
        );
    }

    #[test]
    fn invalid_record_rejected() {
        let mut table = ActivityTable::new(1);
        let bad = ActivityRecord {
            node: NodeId(0),
            timeline_size: 3,
            retweet_count: 4,
            times_retweeted_total: 0.0,
        };
        assert!(table.insert(bad).is_err());
    }

    #[test]
    fn topology_features_pass_through() {
        let s = scores(&[0.1, 0.7, 1.0], &[0.3, 0.0, 0.25]);
        let x = build_features(&s, None, FeatureStrategy::Topology, 3).unwrap();
        for v in 0..3 {
            assert_eq!(x.row(NodeId::new(v)), &[s.ti[v], s.tw[v]]);
        }
    }

    #[test]
    fn out_weights_normalized() {
        let (g, _) = DirectedGraph::from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]).unwrap();
        let w = normalize_out_weights(&g, &[2.0, 3.0, 5.0, 0.0], WeightSource::Graph).unwrap();
        assert_eq!(
            w.distribution(NodeId(0)),
            (&[NodeId(1), NodeId(2)][..], &[0.4, 0.6][..])
        );
        assert_eq!(w.distribution(NodeId(1)).1, &[1.0]);
        assert_eq!(w.distribution(NodeId(2)), (&[][..], &[][..]));
        assert_eq!(w.candidates(NodeId(2)), &[NodeId(3)]);
        assert_eq!(w.flagged, vec![NodeId(2)]);
        assert!(w.distribution(NodeId(3)).0.is_empty());
    }

    #[test]
    fn in_weights_normalized() {
        let (g, _) = DirectedGraph::from_edges(3, [(0, 2, 1.0), (1, 2, 1.0)]).unwrap();
        let w = normalize_in_weights(&g, &[1.0, 3.0], WeightSource::Graph).unwrap();
        assert_eq!(
            w.distribution(NodeId(2)),
            (&[NodeId(0), NodeId(1)][..], &[0.25, 0.75][..])
        );
    }

    #[test]
    fn negative_raw_weight_rejected() {
        let (g, _) = DirectedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            normalize_out_weights(&g, &[-1.0], WeightSource::Graph),
            Err(FeatureError::NegativeWeight { edge: 0, .. })
        ));
        assert!(normalize_out_weights(&g, &[], WeightSource::Graph).is_err());
    }

    #[test]
    fn retweet_pairs_land_on_follow_edges() {
        // 1 follows 0; 0 retweeted by 1 twice
        let (g, _) = DirectedGraph::from_edges(3, [(1, 0, 1.0), (2, 0, 1.0)]).unwrap();
        let mut table = ActivityTable::new(3);
        table.pairs.push(RetweetPair {
            retweeted: NodeId(0),
            retweeter: NodeId(1),
            count: 2,
        });
        table.pairs.push(RetweetPair {
            retweeted: NodeId(2),
            retweeter: NodeId(1),
            count: 1,
        });
        let (w, unmatched) = table.edge_weights(&g);
        assert_eq!(w, vec![2.0, 0.0]);
        assert_eq!(unmatched, 1);
    }
}
