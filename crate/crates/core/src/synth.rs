//! Synthetic ground truth: planted-partition follow graphs, independent
//! cascades over believability, and activity records derived from both.
//!
//! The cascade runs along follow edges in reverse: when `a` becomes a
//! spreader, every follower `v` (edge `v -> a`) is exposed and gets exactly
//! one chance to become a spreader, with probability `β · bel(v, a)`
//! clamped to `[0, 1]`. The uniform for that chance is a hash of the edge id
//! and the cascade seed, so runs with different `β` share their randomness
//! and spreader sets grow monotonically in `β`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::community::{ChaPartition, Role};
use crate::features::{ActivityRecord, ActivityTable, RetweetPair};
use crate::graph::{DirectedGraph, GraphBuilder, GraphError, NodeId};
use crate::labels::{Label, LabeledExample};
use crate::seed;
use crate::tsm::BelievabilityScores;

#[derive(Clone, Debug, PartialEq)]
pub enum SynthError {
    InvalidConfig(&'static str),
    InvalidSeed(NodeId),
    BelievabilityLength { values: usize, edge_count: usize },
    LengthMismatch { expected: usize, found: usize },
    Graph(GraphError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidConfig(msg) => write!(f, "invalid generator configuration: {msg}"),
            SynthError::InvalidSeed(v) => write!(f, "cascade seed {v} is not in the graph"),
            SynthError::BelievabilityLength { values, edge_count } => {
                write!(f, "{values} believability values for {edge_count} edges")
            }
            SynthError::LengthMismatch { expected, found } => {
                write!(f, "per-node input has length {found}, expected {expected}")
            }
            SynthError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SynthError {}

impl From<GraphError> for SynthError {
    fn from(e: GraphError) -> Self {
        SynthError::Graph(e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    /// Size of every planted community, in node-id order.
    pub sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl SbmConfig {
    /// `communities` blocks of `size` nodes each.
    pub fn uniform(communities: usize, size: usize, p_in: f64, p_out: f64, seed: u64) -> Self {
        SbmConfig {
            sizes: vec![size; communities],
            p_in,
            p_out,
            seed,
        }
    }

    pub fn node_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return Err(SynthError::InvalidConfig("edge probabilities must lie in [0, 1]"));
        }
        if self.p_out > self.p_in {
            return Err(SynthError::InvalidConfig("p_out must not exceed p_in"));
        }
        Ok(())
    }
}

/// Index of the next success in a Bernoulli(p) sequence starting at `from`.
fn next_success<R: Rng>(from: usize, p: f64, rng: &mut R) -> Option<usize> {
    if p <= 0.0 {
        return None;
    }
    if p >= 1.0 {
        return Some(from);
    }
    // geometric skip: number of failures before the next success
    let u: f64 = 1.0 - rng.gen::<f64>();
    let skip = libm::floor(libm::log(u) / libm::log1p(-p));
    if skip >= (usize::MAX / 2) as f64 {
        return None;
    }
    Some(from + skip as usize)
}

/// Directed planted-partition graph and its planted community per node.
///
/// Every ordered pair `(u, v)`, `u != v`, independently gets the edge
/// `u -> v` with probability `p_in` inside a block and `p_out` across.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<(DirectedGraph, Vec<u32>), SynthError> {
    cfg.validate()?;
    let n = cfg.node_count();
    let mut planted = Vec::with_capacity(n);
    let mut starts = Vec::with_capacity(cfg.sizes.len() + 1);
    starts.push(0usize);
    for (c, &size) in cfg.sizes.iter().enumerate() {
        planted.extend(core::iter::repeat_n(c as u32, size));
        starts.push(starts.last().copied().unwrap_or(0) + size);
    }
    let mut builder = GraphBuilder::new(n);
    let mut rng = seed::rng(seed::derive(cfg.seed, "sbm"));
    for (u, &cu) in planted.iter().enumerate() {
        let cu = cu as usize;
        for c in 0..cfg.sizes.len() {
            let p = if c == cu { cfg.p_in } else { cfg.p_out };
            let (lo, hi) = (starts[c], starts[c + 1]);
            let mut i = lo;
            while let Some(v) = next_success(i, p, &mut rng) {
                if v >= hi {
                    break;
                }
                if v != u {
                    builder.add_edge(NodeId::new(u), NodeId::new(v), 1.0)?;
                }
                i = v + 1;
            }
        }
    }
    let (g, _) = builder.build()?;
    Ok((g, planted))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub seeds: Vec<NodeId>,
    /// Transmission scale `β`, in `(0, 1]`.
    pub beta: f64,
    pub max_rounds: u32,
    pub seed: u64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            seeds: Vec::new(),
            beta: 0.5,
            max_rounds: 100,
            seed: 0,
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(SynthError::InvalidConfig("beta must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Spreader,
    /// Follows at least one spreader that broadcast, but did not spread.
    Exposed,
    Unexposed,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Spreader => "spreader",
            NodeStatus::Exposed => "exposed",
            NodeStatus::Unexposed => "unexposed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spreader" => Some(NodeStatus::Spreader),
            "exposed" => Some(NodeStatus::Exposed),
            "unexposed" => Some(NodeStatus::Unexposed),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeTrace {
    pub status: Vec<NodeStatus>,
    /// Activation round for spreaders (0 for seeds), first exposure round
    /// for exposed nodes, `None` for unexposed nodes.
    pub round: Vec<Option<u32>>,
    pub is_seed: Vec<bool>,
    /// Followee whose message activated each non-seed spreader.
    pub activated_by: Vec<Option<NodeId>>,
    pub rounds_run: u32,
}

impl CascadeTrace {
    pub fn node_count(&self) -> usize {
        self.status.len()
    }

    pub fn spreaders(&self) -> Vec<NodeId> {
        self.with_status(NodeStatus::Spreader)
    }

    pub fn with_status(&self, status: NodeStatus) -> Vec<NodeId> {
        self.status
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == status)
            .map(|(v, _)| NodeId::new(v))
            .collect()
    }

    pub fn is_spreader(&self, v: NodeId) -> bool {
        self.status[v.index()] == NodeStatus::Spreader
    }

    /// Trace with only status and round known (e.g. loaded from a file).
    pub fn from_status(status: Vec<NodeStatus>, round: Vec<Option<u32>>) -> Result<Self, SynthError> {
        if round.len() != status.len() {
            return Err(SynthError::LengthMismatch {
                expected: status.len(),
                found: round.len(),
            });
        }
        let is_seed = status
            .iter()
            .zip(&round)
            .map(|(&s, &r)| s == NodeStatus::Spreader && r == Some(0))
            .collect();
        let rounds_run = round.iter().flatten().copied().max().unwrap_or(0);
        Ok(CascadeTrace {
            activated_by: vec![None; status.len()],
            status,
            round,
            is_seed,
            rounds_run,
        })
    }
}

/// Shared uniform for the single activation attempt across edge `e`.
#[inline]
pub fn edge_uniform(cascade_seed: u64, e: usize) -> f64 {
    seed::unit_interval(seed::derive_index(seed::derive(cascade_seed, "cascade-edge"), e as u64))
}

pub fn simulate_cascade(
    g: &DirectedGraph,
    bel: &BelievabilityScores,
    cfg: &CascadeConfig,
) -> Result<CascadeTrace, SynthError> {
    cfg.validate()?;
    if bel.len() != g.edge_count() {
        return Err(SynthError::BelievabilityLength {
            values: bel.len(),
            edge_count: g.edge_count(),
        });
    }
    let n = g.node_count();
    let mut status = vec![NodeStatus::Unexposed; n];
    let mut round = vec![None; n];
    let mut is_seed = vec![false; n];
    let mut activated_by = vec![None; n];

    let mut frontier = Vec::new();
    for &s in &cfg.seeds {
        if !g.contains(s) {
            return Err(SynthError::InvalidSeed(s));
        }
        if !is_seed[s.index()] {
            is_seed[s.index()] = true;
            status[s.index()] = NodeStatus::Spreader;
            round[s.index()] = Some(0);
            frontier.push(s);
        }
    }
    frontier.sort_unstable();

    let mut rounds_run = 0;
    while !frontier.is_empty() && rounds_run < cfg.max_rounds {
        rounds_run += 1;
        let mut next = Vec::new();
        for &a in &frontier {
            for (&v, &e) in g.in_sources(a).iter().zip(g.in_edge_ids(a)) {
                let vi = v.index();
                if status[vi] == NodeStatus::Spreader {
                    continue;
                }
                if status[vi] == NodeStatus::Unexposed {
                    status[vi] = NodeStatus::Exposed;
                    round[vi] = Some(rounds_run);
                }
                let p = (cfg.beta * bel.by_edge(e)).clamp(0.0, 1.0);
                if edge_uniform(cfg.seed, e) < p {
                    status[vi] = NodeStatus::Spreader;
                    round[vi] = Some(rounds_run);
                    activated_by[vi] = Some(a);
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }

    Ok(CascadeTrace {
        status,
        round,
        is_seed,
        activated_by,
        rounds_run,
    })
}

/// `count` distinct nodes chosen uniformly.
pub fn random_seeds(node_count: usize, count: usize, seed_value: u64) -> Vec<NodeId> {
    let mut rng = seed::rng(seed::derive(seed_value, "cascade-seeds"));
    let mut all: Vec<NodeId> = (0..node_count).map(NodeId::new).collect();
    let (picked, _) = all.partial_shuffle(&mut rng, count.min(node_count));
    let mut picked = picked.to_vec();
    picked.sort_unstable();
    picked
}

/// Up to `per_community` distinct nodes from every community.
pub fn seeds_per_community(assignment: &[u32], per_community: usize, seed_value: u64) -> Vec<NodeId> {
    let communities = assignment.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); communities];
    for (v, &c) in assignment.iter().enumerate() {
        members[c as usize].push(NodeId::new(v));
    }
    let mut rng = seed::rng(seed::derive(seed_value, "cascade-seeds"));
    let mut picked = Vec::new();
    for m in &mut members {
        m.shuffle(&mut rng);
        picked.extend(m.iter().take(per_community));
    }
    picked.sort_unstable();
    picked
}

/// Fraction of `nodes` (seeds excluded) that end up spreaders.
pub fn spreader_fraction(trace: &CascadeTrace, nodes: &[NodeId]) -> f64 {
    let eligible: Vec<NodeId> = nodes.iter().copied().filter(|v| !trace.is_seed[v.index()]).collect();
    if eligible.is_empty() {
        return 0.0;
    }
    eligible.iter().filter(|&&v| trace.is_spreader(v)).count() as f64 / eligible.len() as f64
}

/// Bisects `β` until the spreader fraction among `nodes` lies in
/// `[low, high]`. Valid because shared per-edge randomness makes the
/// spreader set monotone in `β`. Returns the last trace tried if the
/// window is not reached within `max_steps`.
pub fn calibrate_beta(
    g: &DirectedGraph,
    bel: &BelievabilityScores,
    base: &CascadeConfig,
    nodes: &[NodeId],
    low: f64,
    high: f64,
    max_steps: u32,
) -> Result<(f64, CascadeTrace), SynthError> {
    if !(0.0..=1.0).contains(&low) || !(low..=1.0).contains(&high) {
        return Err(SynthError::InvalidConfig(
            "target window must satisfy 0 <= low <= high <= 1",
        ));
    }
    let run = |beta: f64| {
        let cfg = CascadeConfig { beta, ..base.clone() };
        simulate_cascade(g, bel, &cfg)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut beta = 1.0;
    let mut trace = run(beta)?;
    for _ in 0..max_steps {
        let f = spreader_fraction(&trace, nodes);
        if f > high {
            hi = beta;
        } else if f < low {
            if beta == 1.0 {
                break;
            }
            lo = beta;
        } else {
            break;
        }
        beta = 0.5 * (lo + hi);
        trace = run(beta)?;
    }
    Ok((beta, trace))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledDatasets {
    pub boundary: Vec<LabeledExample>,
    pub core: Vec<LabeledExample>,
}

impl LabeledDatasets {
    pub fn for_role(&self, role: Role) -> &[LabeledExample] {
        match role {
            Role::Boundary => &self.boundary,
            Role::Core => &self.core,
        }
    }
}

/// Boundary and core examples, labeled by trace status; seeds are excluded.
pub fn make_labeled_dataset(trace: &CascadeTrace, cha: &ChaPartition) -> Result<LabeledDatasets, SynthError> {
    if trace.node_count() != cha.node_count() {
        return Err(SynthError::LengthMismatch {
            expected: cha.node_count(),
            found: trace.node_count(),
        });
    }
    let mut out = LabeledDatasets::default();
    for v in 0..trace.node_count() {
        if trace.is_seed[v] {
            continue;
        }
        let node = NodeId::new(v);
        let role = cha.role(node);
        let example = LabeledExample {
            node,
            label: Label::from_spreader(trace.is_spreader(node)),
            role,
        };
        match role {
            Role::Boundary => out.boundary.push(example),
            Role::Core => out.core.push(example),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityConfig {
    /// Minimum timeline length per node.
    pub timeline_size: u32,
    /// Retweets of a followee on a follow edge ~ Binomial(trials, bel).
    pub trials: u32,
    pub seed: u64,
}

impl Default for ActivityConfig {
    fn default() -> Self {
        ActivityConfig {
            timeline_size: 10,
            trials: 3,
            seed: 0,
        }
    }
}

/// Activity consistent with the trust scores and the cascade.
///
/// On every follow edge `v -> a`, `v` retweets `a` a Binomial(trials,
/// bel(v, a)) number of times, plus once more if `a` activated `v` in the
/// cascade. Timelines have `max(timeline_size, retweets)` statuses.
pub fn generate_activity(
    g: &DirectedGraph,
    bel: &BelievabilityScores,
    trace: &CascadeTrace,
    cfg: &ActivityConfig,
) -> Result<ActivityTable, SynthError> {
    if bel.len() != g.edge_count() {
        return Err(SynthError::BelievabilityLength {
            values: bel.len(),
            edge_count: g.edge_count(),
        });
    }
    if trace.node_count() != g.node_count() {
        return Err(SynthError::LengthMismatch {
            expected: g.node_count(),
            found: trace.node_count(),
        });
    }
    let n = g.node_count();
    let mut rng = seed::rng(seed::derive(cfg.seed, "activity"));
    let mut retweets = vec![0u32; n];
    let mut retweeted = vec![0u32; n];
    let mut pairs = Vec::new();
    for (e, edge) in g.edges().enumerate() {
        let p = bel.by_edge(e).clamp(0.0, 1.0);
        let mut count = (0..cfg.trials).filter(|_| rng.gen::<f64>() < p).count() as u32;
        if trace.activated_by[edge.src.index()] == Some(edge.dst) {
            count += 1;
        }
        if count > 0 {
            retweets[edge.src.index()] += count;
            retweeted[edge.dst.index()] += count;
            pairs.push(RetweetPair {
                retweeted: edge.dst,
                retweeter: edge.src,
                count,
            });
        }
    }
    let mut table = ActivityTable::new(n);
    for v in 0..n {
        let timeline_size = cfg.timeline_size.max(retweets[v]);
        table
            .insert(ActivityRecord {
                node: NodeId::new(v),
                timeline_size,
                retweet_count: retweets[v],
                times_retweeted_total: f64::from(retweeted[v]),
            })
            .expect("generated record is valid");
    }
    table.pairs = pairs;
    Ok(table)
}
