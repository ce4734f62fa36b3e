//! Trustingness / trustworthiness fixed point and edge believability.
//!
//! One iteration computes, from the previous iteration's scores,
//!
//! ```text
//! ti(v) = sum over out-edges v->x of w(v,x) / (1 + tw(x)^s)
//! tw(u) = sum over in-edges  x->u of w(x,u) / (1 + ti(x)^s)
//! ```
//!
//! and then divides each score vector by its maximum (left alone when the
//! maximum is zero). Iteration stops once the largest absolute change over
//! both vectors drops below `epsilon`, or after `max_iterations`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{DirectedGraph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsmConfig {
    /// Involvement exponent `s`, in `(0, 1]`.
    pub involvement: f64,
    pub max_iterations: u32,
    /// L-infinity threshold on the per-iteration score change.
    pub epsilon: f64,
    /// Starting value of every ti and tw.
    pub initial_score: f64,
}

impl Default for TsmConfig {
    fn default() -> Self {
        TsmConfig {
            involvement: 0.391,
            max_iterations: 100,
            epsilon: 1e-6,
            initial_score: 1.0,
        }
    }
}

impl TsmConfig {
    pub fn validate(&self) -> Result<(), TrustError> {
        if !(self.involvement > 0.0 && self.involvement <= 1.0) {
            return Err(TrustError::InvalidConfig("involvement must lie in (0, 1]"));
        }
        if self.max_iterations == 0 {
            return Err(TrustError::InvalidConfig("max_iterations must be at least 1"));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(TrustError::InvalidConfig("epsilon must be nonnegative"));
        }
        if !(self.initial_score.is_finite() && self.initial_score >= 0.0) {
            return Err(TrustError::InvalidConfig(
                "initial_score must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrustError {
    InvalidConfig(&'static str),
    /// A score became NaN or infinite.
    NonFinite {
        iteration: u32,
        node: NodeId,
    },
    ScoreLengthMismatch {
        scores: usize,
        node_count: usize,
    },
    EdgeCountMismatch {
        values: usize,
        edge_count: usize,
    },
}

impl fmt::Display for TrustError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrustError::InvalidConfig(msg) => write!(f, "invalid trust configuration: {msg}"),
            TrustError::NonFinite { iteration, node } => {
                write!(f, "non-finite trust score at node {node} in iteration {iteration}")
            }
            TrustError::ScoreLengthMismatch { scores, node_count } => {
                write!(f, "trust scores cover {scores} nodes but the graph has {node_count}")
            }
            TrustError::EdgeCountMismatch { values, edge_count } => {
                write!(f, "{values} believability values for {edge_count} edges")
            }
        }
    }
}

impl core::error::Error for TrustError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustScores {
    /// Trustingness per node.
    pub ti: Vec<f64>,
    /// Trustworthiness per node.
    pub tw: Vec<f64>,
    pub iterations_run: u32,
    pub converged: bool,
}

impl TrustScores {
    pub fn len(&self) -> usize {
        self.ti.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ti.is_empty()
    }
}

/// One synchronous update of both score vectors, before normalization.
///
/// Each output entry depends only on the previous vectors, so the result does
/// not depend on visit order.
pub fn raw_update(g: &DirectedGraph, ti_prev: &[f64], tw_prev: &[f64], s: f64, ti: &mut [f64], tw: &mut [f64]) {
    // (1 + x^s)^-1 per node, shared by every edge touching it
    let damp_tw: Vec<f64> = tw_prev.iter().map(|&x| 1.0 / (1.0 + libm::pow(x, s))).collect();
    let damp_ti: Vec<f64> = ti_prev.iter().map(|&x| 1.0 / (1.0 + libm::pow(x, s))).collect();
    for v in g.nodes() {
        let mut acc = 0.0;
        for (&x, &w) in g.out_targets(v).iter().zip(g.out_weights(v)) {
            acc += w * damp_tw[x.index()];
        }
        ti[v.index()] = acc;

        let mut acc = 0.0;
        let weights = g.weights();
        for (&x, &e) in g.in_sources(v).iter().zip(g.in_edge_ids(v)) {
            acc += weights[e] * damp_ti[x.index()];
        }
        tw[v.index()] = acc;
    }
}

fn normalize_by_max(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(0.0_f64, f64::max);
    if max > 0.0 {
        for x in scores.iter_mut() {
            *x /= max;
        }
    }
}

pub fn compute_tsm(g: &DirectedGraph, cfg: &TsmConfig) -> Result<TrustScores, TrustError> {
    cfg.validate()?;
    let n = g.node_count();
    if n == 0 {
        return Ok(TrustScores {
            ti: Vec::new(),
            tw: Vec::new(),
            iterations_run: 0,
            converged: true,
        });
    }

    let mut ti = vec![cfg.initial_score; n];
    let mut tw = vec![cfg.initial_score; n];
    let mut next_ti = vec![0.0; n];
    let mut next_tw = vec![0.0; n];
    let mut converged = false;
    let mut iterations_run = 0;

    for iteration in 1..=cfg.max_iterations {
        raw_update(g, &ti, &tw, cfg.involvement, &mut next_ti, &mut next_tw);
        normalize_by_max(&mut next_ti);
        normalize_by_max(&mut next_tw);

        let mut delta = 0.0_f64;
        for v in 0..n {
            if !next_ti[v].is_finite() || !next_tw[v].is_finite() {
                return Err(TrustError::NonFinite {
                    iteration,
                    node: NodeId::new(v),
                });
            }
            delta = delta.max((next_ti[v] - ti[v]).abs()).max((next_tw[v] - tw[v]).abs());
        }
        core::mem::swap(&mut ti, &mut next_ti);
        core::mem::swap(&mut tw, &mut next_tw);
        iterations_run = iteration;
        if delta < cfg.epsilon {
            converged = true;
            break;
        }
    }

    Ok(TrustScores {
        ti,
        tw,
        iterations_run,
        converged,
    })
}

/// Per-edge believability `tw(src) * ti(dst)`, indexed by edge id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BelievabilityScores {
    values: Vec<f64>,
}

impl BelievabilityScores {
    /// Wraps precomputed per-edge values (e.g. read back from disk).
    pub fn from_values(g: &DirectedGraph, values: Vec<f64>) -> Result<Self, TrustError> {
        if values.len() != g.edge_count() {
            return Err(TrustError::EdgeCountMismatch {
                values: values.len(),
                edge_count: g.edge_count(),
            });
        }
        Ok(BelievabilityScores { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn by_edge(&self, e: usize) -> f64 {
        self.values[e]
    }

    pub fn get(&self, g: &DirectedGraph, src: NodeId, dst: NodeId) -> Option<f64> {
        g.find_edge(src, dst).map(|e| self.values[e])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn compute_believability(g: &DirectedGraph, scores: &TrustScores) -> Result<BelievabilityScores, TrustError> {
    let n = g.node_count();
    if scores.ti.len() != n || scores.tw.len() != n {
        return Err(TrustError::ScoreLengthMismatch {
            scores: scores.ti.len().min(scores.tw.len()),
            node_count: n,
        });
    }
    let values = g
        .edges()
        .map(|e| scores.tw[e.src.index()] * scores.ti[e.dst.index()])
        .collect();
    Ok(BelievabilityScores { values })
}
