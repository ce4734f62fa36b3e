//! Inductive mean-aggregator embeddings with a softmax spreader classifier.
//!
//! For a sampled neighborhood of depth `K`, layer `k` produces `h^k` for every
//! node of `Nbr_{K-k}`:
//!
//! ```text
//! m   = mean of h^{k-1} over the node's drawn neighbors   (zero if none)
//! h^k = relu(W_k · concat(h^{k-1}_self, m))                (concat aggregator)
//! h^k = relu(W_k · mean({h^{k-1}_self} ∪ neighbors))       (inclusive-mean aggregator)
//! h^k = h^k / ‖h^k‖₂                                        (zero stays zero)
//! ```
//!
//! The root's `h^K` is the embedding `z`; `softmax(C · z)` gives
//! `[p(spreader), p(non-spreader)]`. Training minimizes the summed two-class
//! cross-entropy with plain minibatch SGD and analytic gradients.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureMatrix, SamplingWeights};
use crate::graph::NodeId;
use crate::labels::{class_counts, undersample, Label, LabeledExample};
use crate::linalg::{l2_norm, Matrix};
use crate::sampler::{self, SampledNeighborhood, SamplerConfig, SamplerError};
use crate::seed;

/// Floor applied to probabilities inside the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    DepthMismatch {
        model: usize,
        neighborhood: usize,
    },
    InvalidConfig(&'static str),
    /// Fewer than two examples of a class after balancing.
    InsufficientClass {
        spreaders: usize,
        non_spreaders: usize,
    },
    NonFinite,
    Sampler(SamplerError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DimensionMismatch { expected, found } => {
                write!(f, "feature dimension {found} does not match model input {expected}")
            }
            ModelError::DepthMismatch { model, neighborhood } => {
                write!(
                    f,
                    "neighborhood depth {neighborhood} does not match model depth {model}"
                )
            }
            ModelError::InvalidConfig(msg) => write!(f, "invalid training configuration: {msg}"),
            ModelError::InsufficientClass {
                spreaders,
                non_spreaders,
            } => write!(
                f,
                "need at least 2 examples per class, have {spreaders} spreaders and {non_spreaders} non-spreaders"
            ),
            ModelError::NonFinite => write!(f, "model produced a non-finite value"),
            ModelError::Sampler(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ModelError {}

impl From<SamplerError> for ModelError {
    fn from(e: SamplerError) -> Self {
        ModelError::Sampler(e)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregator {
    /// `W · concat(self, mean(neighbors))`.
    #[default]
    Concat,
    /// `W · mean({self} ∪ neighbors)`.
    InclusiveMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SageParams {
    pub aggregator: Aggregator,
    /// `layers[k-1]` is `W_k`.
    pub layers: Vec<Matrix>,
    /// Maps the embedding to the two logits.
    pub classifier: Matrix,
}

impl SageParams {
    /// Uniform `±1/sqrt(fan_in)` initialization.
    pub fn init(input_dim: usize, hidden_dim: usize, depth: usize, aggregator: Aggregator, seed_value: u64) -> Self {
        let mut rng = seed::rng(seed_value);
        let mut layers = Vec::with_capacity(depth);
        let mut d_in = input_dim;
        for _ in 0..depth {
            let cols = match aggregator {
                Aggregator::Concat => 2 * d_in,
                Aggregator::InclusiveMean => d_in,
            };
            layers.push(Matrix::uniform_fan_in(hidden_dim, cols, &mut rng));
            d_in = hidden_dim;
        }
        let classifier = Matrix::uniform_fan_in(2, d_in, &mut rng);
        SageParams {
            aggregator,
            layers,
            classifier,
        }
    }

    pub fn zeros_like(&self) -> Self {
        SageParams {
            aggregator: self.aggregator,
            layers: self.layers.iter().map(|m| Matrix::zeros(m.rows, m.cols)).collect(),
            classifier: Matrix::zeros(self.classifier.rows, self.classifier.cols),
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        let cols = self.layers.first().map_or(self.classifier.cols, |m| m.cols);
        match self.aggregator {
            Aggregator::Concat if !self.layers.is_empty() => cols / 2,
            _ => cols,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.classifier.cols
    }

    pub fn axpy(&mut self, scale: f64, other: &SageParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.axpy(scale, b);
        }
        self.classifier.axpy(scale, &other.classifier);
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|m| m.data.iter())
            .chain(self.classifier.data.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|m| m.data.iter_mut())
            .chain(self.classifier.data.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.values().count()
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values().map(|x| x * x).sum())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct LayerCache {
    /// Nodes this layer produced outputs for, ascending.
    nodes: Vec<NodeId>,
    /// Drawn neighbors per node, aligned with `nodes`.
    drawn: Vec<Vec<NodeId>>,
    in_dim: usize,
    out_dim: usize,
    /// Aggregated input per node (row-major, `in_dim` wide).
    input: Vec<f64>,
    pre: Vec<f64>,
    norm: Vec<f64>,
    out: Vec<f64>,
}

/// Output of one forward pass, with the activations backward needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub root: NodeId,
    pub embedding: Vec<f64>,
    pub logits: [f64; 2],
    /// `[p(spreader), p(non-spreader)]`.
    pub probs: [f64; 2],
    /// Nodes of `Nbr_K` with their input features (`h^0`).
    inputs: LayerCache,
    layers: Vec<LayerCache>,
}

impl Forward {
    pub fn spreader_probability(&self) -> f64 {
        self.probs[0]
    }
}

fn position(nodes: &[NodeId], v: NodeId) -> usize {
    nodes.binary_search(&v).expect("neighbor present in previous layer")
}

pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let a = libm::exp(logits[0] - m);
    let b = libm::exp(logits[1] - m);
    let s = a + b;
    [a / s, b / s]
}

pub fn forward(nbh: &SampledNeighborhood, x: &FeatureMatrix, params: &SageParams) -> Result<Forward, ModelError> {
    let depth = params.depth();
    if nbh.depth() != depth {
        return Err(ModelError::DepthMismatch {
            model: depth,
            neighborhood: nbh.depth(),
        });
    }
    let d0 = x.dim();
    if d0 != params.input_dim() {
        return Err(ModelError::DimensionMismatch {
            expected: params.input_dim(),
            found: d0,
        });
    }

    let base_nodes = nbh.layer(depth).to_vec();
    let mut base_out = Vec::with_capacity(base_nodes.len() * d0);
    for &v in &base_nodes {
        base_out.extend_from_slice(x.row(v));
    }
    let inputs = LayerCache {
        nodes: base_nodes,
        drawn: Vec::new(),
        in_dim: 0,
        out_dim: d0,
        input: Vec::new(),
        pre: Vec::new(),
        norm: Vec::new(),
        out: base_out,
    };

    let mut layers: Vec<LayerCache> = Vec::with_capacity(depth);
    for k in 1..=depth {
        let w = &params.layers[k - 1];
        let prev = layers.last().unwrap_or(&inputs);
        let d_prev = prev.out_dim;
        let nodes = nbh.layer(depth - k).to_vec();
        let in_dim = w.cols;
        let out_dim = w.rows;
        let mut input = vec![0.0; nodes.len() * in_dim];
        let mut pre = vec![0.0; nodes.len() * out_dim];
        let mut norm = vec![0.0; nodes.len()];
        let mut out = vec![0.0; nodes.len() * out_dim];
        let mut drawn_lists = Vec::with_capacity(nodes.len());

        for (i, &u) in nodes.iter().enumerate() {
            let row = &mut input[i * in_dim..(i + 1) * in_dim];
            let self_h = &prev.out[position(&prev.nodes, u) * d_prev..][..d_prev];
            let drawn = nbh.drawn(u);
            match params.aggregator {
                Aggregator::Concat => {
                    row[..d_prev].copy_from_slice(self_h);
                    if !drawn.is_empty() {
                        let mean = &mut row[d_prev..];
                        for &v in drawn {
                            let h = &prev.out[position(&prev.nodes, v) * d_prev..][..d_prev];
                            for (m, &hv) in mean.iter_mut().zip(h) {
                                *m += hv;
                            }
                        }
                        let inv = 1.0 / drawn.len() as f64;
                        mean.iter_mut().for_each(|m| *m *= inv);
                    }
                }
                Aggregator::InclusiveMean => {
                    row.copy_from_slice(self_h);
                    for &v in drawn {
                        let h = &prev.out[position(&prev.nodes, v) * d_prev..][..d_prev];
                        for (m, &hv) in row.iter_mut().zip(h) {
                            *m += hv;
                        }
                    }
                    let inv = 1.0 / (drawn.len() + 1) as f64;
                    row.iter_mut().for_each(|m| *m *= inv);
                }
            }
            drawn_lists.push(drawn.to_vec());

            let p = &mut pre[i * out_dim..(i + 1) * out_dim];
            w.matvec(row, p);
            let o = &mut out[i * out_dim..(i + 1) * out_dim];
            for (oj, &pj) in o.iter_mut().zip(p.iter()) {
                *oj = pj.max(0.0);
            }
            let n = l2_norm(o);
            norm[i] = n;
            if n > 0.0 {
                o.iter_mut().for_each(|v| *v /= n);
            }
        }
        layers.push(LayerCache {
            nodes,
            drawn: drawn_lists,
            in_dim,
            out_dim,
            input,
            pre,
            norm,
            out,
        });
    }

    let last = layers.last().unwrap_or(&inputs);
    let embedding = last.out[..last.out_dim].to_vec();
    let mut logits = [0.0; 2];
    params.classifier.matvec(&embedding, &mut logits);
    let probs = softmax2(logits);
    if !(probs[0].is_finite() && probs[1].is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok(Forward {
        root: nbh.root(),
        embedding,
        logits,
        probs,
        inputs,
        layers,
    })
}

/// Cross-entropy of one prediction with the probability floor applied.
pub fn example_loss(probs: [f64; 2], label: Label) -> f64 {
    let y = label.one_hot();
    -(y[0] * libm::log(probs[0].max(PROB_FLOOR)) + y[1] * libm::log(probs[1].max(PROB_FLOOR)))
}

/// Summed cross-entropy over a batch.
pub fn loss(labels: &[Label], probs: &[[f64; 2]]) -> f64 {
    labels.iter().zip(probs).map(|(&l, &p)| example_loss(p, l)).sum()
}

/// Adds the gradient of this example's loss to `grads`.
pub fn backward(fwd: &Forward, label: Label, params: &SageParams, grads: &mut SageParams) {
    let y = label.one_hot();
    let dlogits = [fwd.probs[0] - y[0], fwd.probs[1] - y[1]];
    grads.classifier.add_outer(&dlogits, &fwd.embedding, 1.0);
    let mut d_out = vec![0.0; fwd.embedding.len()];
    params.classifier.matvec_t_add(&dlogits, &mut d_out);

    let depth = fwd.layers.len();
    for k in (1..=depth).rev() {
        let layer = &fwd.layers[k - 1];
        let prev = if k >= 2 { &fwd.layers[k - 2] } else { &fwd.inputs };
        let w = &params.layers[k - 1];
        let d_prev = prev.out_dim;
        let mut d_prev_out = if k >= 2 {
            vec![0.0; prev.nodes.len() * d_prev]
        } else {
            Vec::new()
        };
        let mut d_pre = vec![0.0; layer.out_dim];
        let mut d_in = vec![0.0; layer.in_dim];

        for (i, &u) in layer.nodes.iter().enumerate() {
            let g = &d_out[i * layer.out_dim..(i + 1) * layer.out_dim];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let h = &layer.out[i * layer.out_dim..(i + 1) * layer.out_dim];
            let pre = &layer.pre[i * layer.out_dim..(i + 1) * layer.out_dim];
            let n = layer.norm[i];
            let hg: f64 = h.iter().zip(g).map(|(a, b)| a * b).sum();
            for j in 0..layer.out_dim {
                let da = if n > 0.0 { (g[j] - h[j] * hg) / n } else { g[j] };
                d_pre[j] = if pre[j] > 0.0 { da } else { 0.0 };
            }
            let input = &layer.input[i * layer.in_dim..(i + 1) * layer.in_dim];
            grads.layers[k - 1].add_outer(&d_pre, input, 1.0);

            if k >= 2 {
                d_in.iter_mut().for_each(|v| *v = 0.0);
                w.matvec_t_add(&d_pre, &mut d_in);
                let self_pos = position(&prev.nodes, u);
                let drawn = &layer.drawn[i];
                match params.aggregator {
                    Aggregator::Concat => {
                        for (a, &b) in d_prev_out[self_pos * d_prev..][..d_prev]
                            .iter_mut()
                            .zip(&d_in[..d_prev])
                        {
                            *a += b;
                        }
                        if !drawn.is_empty() {
                            let inv = 1.0 / drawn.len() as f64;
                            for &v in drawn {
                                let pos = position(&prev.nodes, v);
                                for (a, &b) in d_prev_out[pos * d_prev..][..d_prev].iter_mut().zip(&d_in[d_prev..]) {
                                    *a += b * inv;
                                }
                            }
                        }
                    }
                    Aggregator::InclusiveMean => {
                        let inv = 1.0 / (drawn.len() + 1) as f64;
                        for pos in core::iter::once(self_pos).chain(drawn.iter().map(|&v| position(&prev.nodes, v))) {
                            for (a, &b) in d_prev_out[pos * d_prev..][..d_prev].iter_mut().zip(&d_in) {
                                *a += b * inv;
                            }
                        }
                    }
                }
            }
        }
        d_out = d_prev_out;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden_dim: usize,
    pub aggregator: Aggregator,
    /// Draw fresh neighborhoods every epoch instead of reusing the first draw.
    pub resample_each_epoch: bool,
    /// Undersample the majority class before training.
    pub balance_classes: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 100,
            batch_size: 64,
            seed: 0,
            hidden_dim: 128,
            aggregator: Aggregator::Concat,
            resample_each_epoch: true,
            balance_classes: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig("learning_rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch_size must be at least 1"));
        }
        if self.hidden_dim == 0 {
            return Err(ModelError::InvalidConfig("hidden_dim must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 0 is the untrained model.
    pub epoch: usize,
    /// Mean per-example loss on the (balanced) training set.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: SageParams,
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub train_spreaders: usize,
    pub train_non_spreaders: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub node: NodeId,
    pub spreader_probability: f64,
    pub label: Label,
}

/// Hard label at 0.5; an exact tie is a non-spreader.
pub fn threshold_label(p_spreader: f64) -> Label {
    Label::from_spreader(p_spreader > 0.5)
}

fn neighborhoods(
    nodes: impl Iterator<Item = NodeId>,
    weights: &SamplingWeights,
    sampler_cfg: &SamplerConfig,
    seed_value: u64,
) -> Result<Vec<SampledNeighborhood>, ModelError> {
    let cfg = SamplerConfig {
        seed: seed_value,
        ..*sampler_cfg
    };
    nodes
        .map(|v| sampler::sample(v, weights, &cfg).map_err(ModelError::from))
        .collect()
}

/// Mean loss and accuracy over `examples` with the given neighborhoods.
fn evaluate(
    examples: &[LabeledExample],
    nbhs: &[SampledNeighborhood],
    x: &FeatureMatrix,
    params: &SageParams,
) -> Result<(f64, f64), ModelError> {
    if examples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut total = 0.0;
    let mut correct = 0usize;
    for (ex, nbh) in examples.iter().zip(nbhs) {
        let fwd = forward(nbh, x, params)?;
        total += example_loss(fwd.probs, ex.label);
        if threshold_label(fwd.probs[0]) == ex.label {
            correct += 1;
        }
    }
    let n = examples.len() as f64;
    Ok((total / n, correct as f64 / n))
}

/// Minibatch SGD on the summed cross-entropy.
///
/// Keeps the parameters with the lowest validation loss (the last epoch's
/// when `validation` is empty). `sampler_cfg.seed` is ignored: sampling
/// streams are derived from `cfg.seed`.
pub fn train(
    examples: &[LabeledExample],
    validation: &[LabeledExample],
    weights: &SamplingWeights,
    x: &FeatureMatrix,
    sampler_cfg: &SamplerConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    sampler_cfg.validate()?;
    let data = if cfg.balance_classes {
        undersample(examples, seed::derive(cfg.seed, "undersample"))
    } else {
        examples.to_vec()
    };
    let (spreaders, non_spreaders) = class_counts(&data);
    if spreaders < 2 || non_spreaders < 2 {
        return Err(ModelError::InsufficientClass {
            spreaders,
            non_spreaders,
        });
    }

    let mut params = SageParams::init(
        x.dim(),
        cfg.hidden_dim,
        sampler_cfg.depth,
        cfg.aggregator,
        seed::derive(cfg.seed, "init"),
    );
    let eval_seed = seed::derive(cfg.seed, "eval");
    let train_eval_nbhs = neighborhoods(data.iter().map(|e| e.node), weights, sampler_cfg, eval_seed)?;
    let val_nbhs = neighborhoods(validation.iter().map(|e| e.node), weights, sampler_cfg, eval_seed)?;

    let log_epoch = |epoch: usize, params: &SageParams| -> Result<EpochLog, ModelError> {
        let (train_loss, train_accuracy) = evaluate(&data, &train_eval_nbhs, x, params)?;
        let val_loss = if validation.is_empty() {
            None
        } else {
            Some(evaluate(validation, &val_nbhs, x, params)?.0)
        };
        Ok(EpochLog {
            epoch,
            train_loss,
            train_accuracy,
            val_loss,
        })
    };

    let mut log = vec![log_epoch(0, &params)?];
    let mut best = (log[0].val_loss.unwrap_or(f64::INFINITY), 0usize, params.clone());

    let sample_base = seed::derive(cfg.seed, "sample");
    let mut shuffle_rng = seed::rng(seed::derive(cfg.seed, "shuffle"));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut nbhs = Vec::new();
    let mut grads = params.zeros_like();

    for epoch in 1..=cfg.epochs {
        if cfg.resample_each_epoch || epoch == 1 {
            let epoch_seed = seed::derive_index(sample_base, if cfg.resample_each_epoch { epoch as u64 } else { 0 });
            nbhs = neighborhoods(data.iter().map(|e| e.node), weights, sampler_cfg, epoch_seed)?;
        }
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.values_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let fwd = forward(&nbhs[i], x, &params)?;
                backward(&fwd, data[i].label, &params, &mut grads);
            }
            params.axpy(-cfg.learning_rate, &grads);
        }
        if !params.is_finite() {
            return Err(ModelError::NonFinite);
        }
        let entry = log_epoch(epoch, &params)?;
        log.push(entry);
        match entry.val_loss {
            Some(v) if v < best.0 => best = (v, epoch, params.clone()),
            Some(_) => {}
            None => best = (f64::INFINITY, epoch, params.clone()),
        }
    }

    Ok(TrainOutcome {
        params: best.2,
        log,
        best_epoch: best.1,
        train_spreaders: spreaders,
        train_non_spreaders: non_spreaders,
    })
}

/// Spreader probability and hard label for every node in `nodes`.
pub fn predict(
    nodes: &[NodeId],
    params: &SageParams,
    weights: &SamplingWeights,
    x: &FeatureMatrix,
    sampler_cfg: &SamplerConfig,
) -> Result<Vec<Prediction>, ModelError> {
    nodes
        .iter()
        .map(|&node| {
            let nbh = sampler::sample(node, weights, sampler_cfg)?;
            let fwd = forward(&nbh, x, params)?;
            let p = fwd.spreader_probability();
            Ok(Prediction {
                node,
                spreader_probability: p,
                label: threshold_label(p),
            })
        })
        .collect()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::community::Role;
    use crate::features::{normalize_out_weights, FeatureStrategy, WeightSource};
    use crate::graph::DirectedGraph;
    use rand::Rng;

    fn toy_features() -> FeatureMatrix {
        FeatureMatrix::from_rows(
            FeatureStrategy::Topology,
            &[[0.2, 0.9], [0.5, 0.1], [1.0, 0.3], [0.0, 0.7], [0.6, 0.6]],
        )
    }

    fn nbh_k1(root: u32, nbrs: &[u32]) -> SampledNeighborhood {
        SampledNeighborhood::from_draws(
            NodeId(root),
            1,
            vec![(NodeId(root), nbrs.iter().map(|&v| NodeId(v)).collect())],
        )
    }

    /// Straight-line K = 1 concat forward, written independently of `forward`.
    fn reference_forward(root: usize, nbrs: &[usize], x: &[[f64; 2]], p: &SageParams) -> [f64; 2] {
        let w = &p.layers[0];
        let mut input = [x[root][0], x[root][1], 0.0, 0.0];
        if !nbrs.is_empty() {
            for &v in nbrs {
                input[2] += x[v][0];
                input[3] += x[v][1];
            }
            input[2] /= nbrs.len() as f64;
            input[3] /= nbrs.len() as f64;
        }
        let mut h: Vec<f64> = (0..w.rows)
            .map(|r| {
                let mut s = 0.0;
                for c in 0..4 {
                    s += w.get(r, c) * input[c];
                }
                if s > 0.0 {
                    s
                } else {
                    0.0
                }
            })
            .collect();
        let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            h.iter_mut().for_each(|v| *v /= norm);
        }
        let l0: f64 = (0..h.len()).map(|j| p.classifier.get(0, j) * h[j]).sum();
        let l1: f64 = (0..h.len()).map(|j| p.classifier.get(1, j) * h[j]).sum();
        let e0 = (l0 - l0.max(l1)).exp();
        let e1 = (l1 - l0.max(l1)).exp();
        [e0 / (e0 + e1), e1 / (e0 + e1)]
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let mut p = SageParams::init(2, 8, 1, Aggregator::Concat, 1);
        p.values_mut().for_each(|v| *v = 0.0);
        let fwd = forward(&nbh_k1(0, &[1, 2]), &toy_features(), &p).unwrap();
        assert!(fwd.embedding.iter().all(|&v| v == 0.0));
        assert_eq!(fwd.probs, [0.5, 0.5]);
    }

    #[test]
    fn empty_neighborhood_uses_self_only() {
        let p = SageParams::init(2, 16, 1, Aggregator::Concat, 3);
        let x = toy_features();
        let alone = forward(&nbh_k1(2, &[]), &x, &p).unwrap();
        // same self features on another node, also alone
        let x2 = FeatureMatrix::from_rows(FeatureStrategy::Topology, &[[1.0, 0.3], [9.0, 9.0]]);
        let other = forward(&nbh_k1(0, &[]), &x2, &p).unwrap();
        assert_eq!(alone.probs, other.probs);
        assert_eq!(alone.embedding, other.embedding);
    }

    #[test]
    fn forward_matches_reference_implementation() {
        let rows = [[0.2, 0.9], [0.5, 0.1], [1.0, 0.3], [0.0, 0.7], [0.6, 0.6]];
        let x = toy_features();
        for seed_value in 0..20 {
            let p = SageParams::init(2, 12, 1, Aggregator::Concat, seed_value);
            for (root, nbrs) in [
                (0usize, vec![1usize, 2]),
                (3, vec![]),
                (4, vec![0, 1, 2, 3]),
                (1, vec![4]),
            ] {
                let nb: Vec<u32> = nbrs.iter().map(|&v| v as u32).collect();
                let fwd = forward(&nbh_k1(root as u32, &nb), &x, &p).unwrap();
                let expected = reference_forward(root, &nbrs, &rows, &p);
                assert!((fwd.probs[0] - expected[0]).abs() < 1e-12);
                assert!((fwd.probs[1] - expected[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embedding_is_unit_norm_and_softmax_sums_to_one() {
        let x = toy_features();
        for seed_value in 0..20 {
            let p = SageParams::init(2, 32, 1, Aggregator::Concat, seed_value);
            let fwd = forward(&nbh_k1(4, &[0, 2, 3]), &x, &p).unwrap();
            let n = l2_norm(&fwd.embedding);
            if n > 0.0 {
                assert!((n - 1.0).abs() < 1e-9);
            }
            assert!((fwd.probs[0] + fwd.probs[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn neighbor_order_does_not_matter() {
        let x = toy_features();
        let p = SageParams::init(2, 16, 1, Aggregator::Concat, 9);
        let a = forward(&nbh_k1(0, &[1, 2, 3, 4]), &x, &p).unwrap();
        let b = forward(&nbh_k1(0, &[4, 2, 3, 1]), &x, &p).unwrap();
        assert_eq!(a.probs, b.probs);
        assert_eq!(a.embedding, b.embedding);
    }

    #[test]
    fn loss_values() {
        assert_eq!(example_loss([1.0, 0.0], Label::Spreader), 0.0);
        let ln2 = core::f64::consts::LN_2;
        assert!((example_loss([0.5, 0.5], Label::Spreader) - ln2).abs() < 1e-15);
        assert!((example_loss([0.5, 0.5], Label::NonSpreader) - ln2).abs() < 1e-15);
        // floor keeps log finite
        assert!(example_loss([0.0, 1.0], Label::Spreader).is_finite());
        let labels = [Label::Spreader, Label::NonSpreader, Label::Spreader];
        let probs = [[0.9, 0.1], [0.3, 0.7], [0.2, 0.8]];
        let hand = -(0.9f64.ln() + 0.7f64.ln() + 0.2f64.ln());
        assert!((loss(&labels, &probs) - hand).abs() < 1e-12);
    }

    fn total_loss(batch: &[(SampledNeighborhood, Label)], x: &FeatureMatrix, p: &SageParams) -> f64 {
        batch
            .iter()
            .map(|(nbh, l)| example_loss(forward(nbh, x, p).unwrap().probs, *l))
            .sum()
    }

    fn check_gradients(aggregator: Aggregator, depth: usize, seed_value: u64) {
        let mut rng = seed::rng(seed_value);
        let x = FeatureMatrix::from_rows(
            FeatureStrategy::Topology,
            &(0..6).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect::<Vec<_>>(),
        );
        let batch: Vec<(SampledNeighborhood, Label)> = (0..3)
            .map(|i| {
                let root = NodeId(i);
                let mut draws = vec![(root, vec![NodeId((i + 1) % 6), NodeId((i + 3) % 6)])];
                if depth == 2 {
                    draws.push((NodeId((i + 1) % 6), vec![NodeId((i + 2) % 6)]));
                    draws.push((NodeId((i + 3) % 6), vec![NodeId((i + 4) % 6), NodeId((i + 5) % 6)]));
                }
                let label = Label::from_spreader(i % 2 == 0);
                (SampledNeighborhood::from_draws(root, depth, draws), label)
            })
            .collect();
        let params = SageParams::init(2, 5, depth, aggregator, seed_value + 100);
        let mut grads = params.zeros_like();
        for (nbh, l) in &batch {
            backward(&forward(nbh, &x, &params).unwrap(), *l, &params, &mut grads);
        }
        let analytic: Vec<f64> = grads.values().copied().collect();
        let h = 1e-5;
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = params.clone();
            *plus.values_mut().nth(i).unwrap() += h;
            let mut minus = params.clone();
            *minus.values_mut().nth(i).unwrap() -= h;
            let fd = (total_loss(&batch, &x, &plus) - total_loss(&batch, &x, &minus)) / (2.0 * h);
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            assert!(err < 1e-4, "param {i}: analytic {a} vs fd {fd}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for s in 0..5 {
            check_gradients(Aggregator::Concat, 1, s);
            check_gradients(Aggregator::InclusiveMean, 1, s);
            check_gradients(Aggregator::Concat, 2, s);
            check_gradients(Aggregator::InclusiveMean, 2, s);
        }
    }

    #[test]
    fn classifier_gradient_closed_form() {
        let x = toy_features();
        let p = SageParams::init(2, 6, 1, Aggregator::Concat, 4);
        let fwd = forward(&nbh_k1(1, &[0, 3]), &x, &p).unwrap();
        let mut grads = p.zeros_like();
        backward(&fwd, Label::NonSpreader, &p, &mut grads);
        let y = Label::NonSpreader.one_hot();
        for r in 0..2 {
            for c in 0..6 {
                let expected = (fwd.probs[r] - y[r]) * fwd.embedding[c];
                assert!((grads.classifier.get(r, c) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn saturated_correct_prediction_has_tiny_gradient() {
        let x = toy_features();
        let mut p = SageParams::init(2, 4, 1, Aggregator::Concat, 2);
        let nbh = nbh_k1(2, &[0]);
        let z = forward(&nbh, &x, &p).unwrap().embedding;
        // classifier aligned with z so the spreader logit dominates
        for c in 0..4 {
            p.classifier.data[c] = 60.0 * z[c];
            p.classifier.data[4 + c] = -60.0 * z[c];
        }
        let fwd = forward(&nbh, &x, &p).unwrap();
        let mut grads = p.zeros_like();
        backward(&fwd, Label::Spreader, &p, &mut grads);
        assert!(grads.norm() < 1e-6);
    }

    fn separable_toy(n_per_class: u32) -> (DirectedGraph, FeatureMatrix, Vec<LabeledExample>) {
        let n = 2 * n_per_class;
        let (g, _) = DirectedGraph::from_edges(n as usize, []).unwrap();
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|i| if i < n_per_class { [1.0, 0.0] } else { [0.0, 1.0] })
            .collect();
        let x = FeatureMatrix::from_rows(FeatureStrategy::Topology, &rows);
        let examples = (0..n)
            .map(|i| LabeledExample {
                node: NodeId(i),
                label: Label::from_spreader(i < n_per_class),
                role: Role::Boundary,
            })
            .collect();
        (g, x, examples)
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let (g, x, examples) = separable_toy(20);
        let w = normalize_out_weights(&g, g.weights(), WeightSource::Graph).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            seed: 5,
            ..TrainConfig::default()
        };
        let out = train(&examples, &[], &w, &x, &SamplerConfig::default(), &cfg).unwrap();
        assert_eq!(out.log.last().unwrap().train_accuracy, 1.0);
        assert!(out.log[1].train_loss <= out.log[0].train_loss);
        let nodes: Vec<NodeId> = examples.iter().map(|e| e.node).collect();
        let preds = predict(&nodes, &out.params, &w, &x, &SamplerConfig::default()).unwrap();
        assert!(preds.iter().zip(&examples).all(|(p, e)| p.label == e.label));
        assert!(predict(&[], &out.params, &w, &x, &SamplerConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let (g, x, examples) = separable_toy(3);
        let w = normalize_out_weights(&g, g.weights(), WeightSource::Graph).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            seed: 8,
            ..TrainConfig::default()
        };
        let out = train(&examples, &[], &w, &x, &SamplerConfig::default(), &cfg).unwrap();
        let init = SageParams::init(2, 128, 1, Aggregator::Concat, seed::derive(8, "init"));
        assert_eq!(out.params, init);
        assert_eq!(out.log.len(), 1);
    }

    #[test]
    fn training_is_deterministic() {
        let (g, x, examples) = separable_toy(6);
        let w = normalize_out_weights(&g, g.weights(), WeightSource::Graph).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            seed: 13,
            ..TrainConfig::default()
        };
        let a = train(&examples, &examples[..4], &w, &x, &SamplerConfig::default(), &cfg).unwrap();
        let b = train(&examples, &examples[..4], &w, &x, &SamplerConfig::default(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_class_refused() {
        let (g, x, mut examples) = separable_toy(3);
        let w = normalize_out_weights(&g, g.weights(), WeightSource::Graph).unwrap();
        for e in examples.iter_mut().skip(1).take(2) {
            e.label = Label::NonSpreader;
        }
        let err = train(
            &examples,
            &[],
            &w,
            &x,
            &SamplerConfig::default(),
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            ModelError::InsufficientClass {
                spreaders: 1,
                non_spreaders: 1
            }
        );
    }

    #[test]
    fn tie_is_non_spreader() {
        assert_eq!(threshold_label(0.5), Label::NonSpreader);
        assert_eq!(threshold_label(0.5000001), Label::Spreader);
    }
}
