//! Trust-weighted neighborhood sampling.
//!
//! Starting from `Nbr_0 = {root}`, depth `k` expands every node first reached
//! at depth `k - 1` by drawing up to `sample_size` distinct neighbors, and
//! `Nbr_k = Nbr_{k-1} ∪ drawn`. Weighted draws are successive proportional
//! picks without replacement; uniform draws ignore the weights.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::SamplingWeights;
use crate::graph::NodeId;
use crate::seed::{self, StageRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    Weighted,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SamplerError {
    InvalidConfig(&'static str),
    InvalidRoot(NodeId),
    UnknownMode,
}

impl fmt::Display for SamplerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerError::InvalidConfig(msg) => write!(f, "invalid sampler configuration: {msg}"),
            SamplerError::InvalidRoot(v) => write!(f, "sampling root {v} is not in the graph"),
            SamplerError::UnknownMode => write!(f, "sampler mode must be weighted or uniform"),
        }
    }
}

impl core::error::Error for SamplerError {}

impl FromStr for SamplerMode {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighted" => Ok(SamplerMode::Weighted),
            "uniform" | "rand" => Ok(SamplerMode::Uniform),
            _ => Err(SamplerError::UnknownMode),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub depth: usize,
    pub sample_size: usize,
    pub mode: SamplerMode,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            depth: 1,
            sample_size: 25,
            mode: SamplerMode::Weighted,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.depth == 0 {
            return Err(SamplerError::InvalidConfig("depth must be at least 1"));
        }
        if self.sample_size == 0 {
            return Err(SamplerError::InvalidConfig("sample_size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledNeighborhood {
    root: NodeId,
    /// `layers[k]` is `Nbr_k`, ascending and duplicate-free.
    layers: Vec<Vec<NodeId>>,
    /// Draw made for every expanded node, sorted by node; each draw ascending.
    draws: Vec<(NodeId, Vec<NodeId>)>,
}

impl SampledNeighborhood {
    /// Builds a neighborhood from explicit draws (tests and fixed-sample use).
    ///
    /// `draws` must contain the root; layers are derived by expanding from it.
    pub fn from_draws(root: NodeId, depth: usize, mut draws: Vec<(NodeId, Vec<NodeId>)>) -> Self {
        for (_, d) in draws.iter_mut() {
            d.sort_unstable();
            d.dedup();
        }
        draws.sort_by_key(|(u, _)| *u);
        let mut nbh = SampledNeighborhood {
            root,
            layers: alloc::vec![alloc::vec![root]],
            draws,
        };
        let mut frontier = alloc::vec![root];
        for _ in 0..depth {
            let mut next = nbh.layers.last().expect("layer 0").clone();
            let mut fresh = Vec::new();
            for &u in &frontier {
                for &v in nbh.drawn(u) {
                    if next.binary_search(&v).is_err() {
                        let pos = next.binary_search(&v).unwrap_err();
                        next.insert(pos, v);
                        fresh.push(v);
                    }
                }
            }
            fresh.sort_unstable();
            nbh.layers.push(next);
            frontier = fresh;
        }
        nbh
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// `Nbr_k`.
    pub fn layer(&self, k: usize) -> &[NodeId] {
        &self.layers[k]
    }

    /// Neighbors drawn for `u`; empty if `u` was never expanded.
    pub fn drawn(&self, u: NodeId) -> &[NodeId] {
        match self.draws.binary_search_by_key(&u, |(v, _)| *v) {
            Ok(i) => &self.draws[i].1,
            Err(_) => &[],
        }
    }

    pub fn draws(&self) -> &[(NodeId, Vec<NodeId>)] {
        &self.draws
    }
}

fn draw_weighted(targets: &[NodeId], probs: &[f64], k: usize, rng: &mut StageRng) -> Vec<NodeId> {
    let mut pool: Vec<(NodeId, f64)> = targets
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&t, &p)| (t, p))
        .collect();
    if k >= pool.len() {
        return pool.into_iter().map(|(t, _)| t).collect();
    }
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = pool.iter().map(|(_, p)| p).sum();
        let mut r = rng.gen::<f64>() * total;
        let mut pick = pool.len() - 1;
        for (i, (_, p)) in pool.iter().enumerate() {
            if r < *p {
                pick = i;
                break;
            }
            r -= p;
        }
        out.push(pool.remove(pick).0);
    }
    out.sort_unstable();
    out
}

fn draw_uniform(candidates: &[NodeId], k: usize, rng: &mut StageRng) -> Vec<NodeId> {
    if k >= candidates.len() {
        return candidates.to_vec();
    }
    let mut pool = candidates.to_vec();
    for i in 0..k {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

/// Draws the neighborhood of `root`. The random stream depends only on
/// `(cfg.seed, root)`, so roots can be sampled in any order.
pub fn sample(root: NodeId, w: &SamplingWeights, cfg: &SamplerConfig) -> Result<SampledNeighborhood, SamplerError> {
    cfg.validate()?;
    if root.index() >= w.node_count() {
        return Err(SamplerError::InvalidRoot(root));
    }
    let mut rng = seed::rng(seed::derive_index(cfg.seed, u64::from(root.0)));
    let mut draws: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
    let mut frontier = alloc::vec![root];
    let mut expanded = alloc::collections::BTreeSet::new();
    for _ in 0..cfg.depth {
        let mut fresh = Vec::new();
        for &u in &frontier {
            if !expanded.insert(u) {
                continue;
            }
            let drawn = match cfg.mode {
                SamplerMode::Weighted => {
                    let (targets, probs) = w.distribution(u);
                    draw_weighted(targets, probs, cfg.sample_size, &mut rng)
                }
                SamplerMode::Uniform => draw_uniform(w.candidates(u), cfg.sample_size, &mut rng),
            };
            fresh.extend(drawn.iter().copied().filter(|v| !expanded.contains(v)));
            draws.push((u, drawn));
        }
        fresh.sort_unstable();
        fresh.dedup();
        frontier = fresh;
    }
    Ok(SampledNeighborhood::from_draws(root, cfg.depth, draws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{normalize_out_weights, WeightSource};
    use crate::graph::DirectedGraph;

    fn star(weights: &[f64]) -> SamplingWeights {
        let k = weights.len() as u32;
        let (g, _) = DirectedGraph::from_edges(k as usize + 1, (1..=k).map(|t| (0, t, 1.0))).unwrap();
        normalize_out_weights(&g, weights, WeightSource::Graph).unwrap()
    }

    #[test]
    fn degenerate_distribution_always_picks_the_mass() {
        let w = star(&[0.0, 1.0, 0.0]);
        for s in 0..50 {
            let cfg = SamplerConfig {
                sample_size: 1,
                seed: s,
                ..SamplerConfig::default()
            };
            assert_eq!(sample(NodeId(0), &w, &cfg).unwrap().drawn(NodeId(0)), &[NodeId(2)]);
        }
    }

    #[test]
    fn large_sample_size_exhausts_neighbors() {
        let w = star(&[1.0, 2.0, 3.0, 4.0]);
        for mode in [SamplerMode::Weighted, SamplerMode::Uniform] {
            let cfg = SamplerConfig {
                sample_size: 4,
                mode,
                ..SamplerConfig::default()
            };
            let nbh = sample(NodeId(0), &w, &cfg).unwrap();
            assert_eq!(nbh.drawn(NodeId(0)), &[NodeId(1), NodeId(2), NodeId(3), NodeId(4)]);
            assert_eq!(nbh.layer(0), &[NodeId(0)]);
            assert_eq!(nbh.layer(1).len(), 5);
        }
    }

    #[test]
    fn empty_distribution_yields_root_only() {
        let w = star(&[0.0, 0.0]);
        let nbh = sample(NodeId(0), &w, &SamplerConfig::default()).unwrap();
        assert!(nbh.drawn(NodeId(0)).is_empty());
        assert_eq!(nbh.layer(1), &[NodeId(0)]);
        // uniform ignores weights
        let cfg = SamplerConfig {
            mode: SamplerMode::Uniform,
            ..SamplerConfig::default()
        };
        assert_eq!(sample(NodeId(0), &w, &cfg).unwrap().drawn(NodeId(0)).len(), 2);
    }

    #[test]
    fn without_replacement_and_deterministic() {
        let w = star(&[0.5, 0.2, 0.1, 0.1, 0.05, 0.05]);
        let cfg = SamplerConfig {
            sample_size: 3,
            seed: 11,
            ..SamplerConfig::default()
        };
        let a = sample(NodeId(0), &w, &cfg).unwrap();
        let b = sample(NodeId(0), &w, &cfg).unwrap();
        assert_eq!(a, b);
        let d = a.drawn(NodeId(0));
        assert_eq!(d.len(), 3);
        assert!(d.windows(2).all(|p| p[0] < p[1]));
        let differs = (0..20u64).any(|s| {
            let other = SamplerConfig { seed: s, ..cfg };
            sample(NodeId(0), &w, &other).unwrap().drawn(NodeId(0)) != d
        });
        assert!(differs);
    }

    #[test]
    fn depth_two_expands_new_nodes() {
        // 0 -> 1 -> 2, 0 -> 2
        let (g, _) = DirectedGraph::from_edges(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap();
        let w = normalize_out_weights(&g, g.weights(), WeightSource::Graph).unwrap();
        let cfg = SamplerConfig {
            depth: 2,
            ..SamplerConfig::default()
        };
        let nbh = sample(NodeId(0), &w, &cfg).unwrap();
        assert_eq!(nbh.layer(1), &[NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(nbh.drawn(NodeId(1)), &[NodeId(2)]);
        assert!(nbh.layer(2).starts_with(&[NodeId(0)]));
        for k in 1..=2 {
            for v in nbh.layer(k - 1) {
                assert!(nbh.layer(k).contains(v));
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let w = star(&[1.0]);
        assert_eq!(
            sample(NodeId(5), &w, &SamplerConfig::default()),
            Err(SamplerError::InvalidRoot(NodeId(5)))
        );
        let cfg = SamplerConfig {
            sample_size: 0,
            ..SamplerConfig::default()
        };
        assert!(sample(NodeId(0), &w, &cfg).is_err());
    }
}
