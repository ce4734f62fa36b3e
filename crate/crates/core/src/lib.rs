//! Predicting which boundary and core members of a network community will
//! pick up and forward a piece of (mis)information.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only computation:
//!
//! - [`graph`]: immutable directed weighted graph in CSR form.
//! - [`tsm`]: trustingness / trustworthiness fixed-point iteration and edge
//!   believability.
//! - [`community`]: Louvain partitioning and the neighbor / boundary / core
//!   split of every community.
//! - [`features`]: topology- and activity-based node features and the
//!   normalized per-node sampling distributions.
//! - [`sampler`]: trust-weighted neighborhood sampling.
//! - [`sage`]: mean-aggregator embedding model, softmax classifier, loss,
//!   analytic gradients and SGD training.
//! - [`baselines`]: 1-D threshold classifiers on the two trust features.
//! - [`synth`]: planted-partition graphs, believability cascades and
//!   synthetic activity records.
//! - [`eval`]: splits, undersampling and spreader-class metrics.
//! - [`experiment`]: the end-to-end pipeline tying everything together.
//!
//! Edge direction is fixed crate-wide: an edge `b -> a` means "b follows a",
//! so information posted by `a` flows to `b`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod community;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod graph;
pub mod labels;
pub mod linalg;
pub mod sage;
pub mod sampler;
pub mod seed;
pub mod synth;
pub mod tsm;

pub use graph::{DirectedGraph, EdgeView, GraphBuilder, GraphError, NodeId};
