//! End-to-end pipeline: trust scores, communities, roles, features,
//! labels, cross-validated training and spreader-class metrics.
//!
//! Every stochastic stage draws its seed from the master seed through
//! [`SeedSchedule`], which is echoed in the report.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_threshold, predict_threshold, BaselineError, BaselineKind, ThresholdModel};
use crate::community::{
    cha_partition, louvain, ChaPartition, CommunityError, CommunityPartition, LouvainConfig, NeighborDirection, Role,
};
use crate::eval::{compute_metrics, make_splits, EvalError, FoldMetrics, MetricsReport, SplitPlan};
use crate::features::{
    believability_weights, build_features, normalize_weights, ActivityTable, FeatureError, FeatureMatrix,
    FeatureStrategy, SampleDirection, SamplingWeights, WeightSource,
};
use crate::graph::{DirectedGraph, NodeId};
use crate::labels::{undersample, Label, LabeledExample};
use crate::sage::{predict, train, ModelError, TrainConfig};
use crate::sampler::{SamplerConfig, SamplerMode};
use crate::seed;
use crate::synth::{make_labeled_dataset, CascadeTrace, LabeledDatasets, SynthError};
use crate::tsm::{compute_believability, compute_tsm, BelievabilityScores, TrustError, TrustScores, TsmConfig};

/// Which edge weights drive neighborhood sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerStrategy {
    /// Believability of each follow edge.
    Top,
    /// Retweet counts on each follow edge.
    Act,
    /// Uniform over neighbors.
    Rand,
}

impl SamplerStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerStrategy::Top => "top",
            SamplerStrategy::Act => "act",
            SamplerStrategy::Rand => "rand",
        }
    }
}

impl FromStr for SamplerStrategy {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "top" => Ok(SamplerStrategy::Top),
            "act" => Ok(SamplerStrategy::Act),
            "rand" => Ok(SamplerStrategy::Rand),
            _ => Err(ExperimentError::InvalidConfig(
                "sampler strategy must be top, act or rand",
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Sage {
        sampler: SamplerStrategy,
        features: FeatureStrategy,
    },
    Baseline {
        baseline: BaselineKind,
        features: FeatureStrategy,
    },
}

impl ModelSpec {
    pub fn features(&self) -> FeatureStrategy {
        match *self {
            ModelSpec::Sage { features, .. } | ModelSpec::Baseline { features, .. } => features,
        }
    }

    fn needs_activity(&self) -> bool {
        self.features() == FeatureStrategy::Activity
            || matches!(
                self,
                ModelSpec::Sage {
                    sampler: SamplerStrategy::Act,
                    ..
                }
            )
    }

    /// `sampler/features` for SAGE, the baseline name otherwise.
    pub fn label(&self) -> alloc::string::String {
        match self {
            ModelSpec::Sage { sampler, features } => alloc::format!("{}/{}", sampler.as_str(), features.as_str()),
            ModelSpec::Baseline { baseline, features } => {
                alloc::format!("{}/{}", baseline.as_str(), features.as_str())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Role,
    pub model: ModelSpec,
    pub tsm: TsmConfig,
    pub resolution: f64,
    pub neighbor_direction: NeighborDirection,
    pub sample_direction: SampleDirection,
    pub depth: usize,
    pub sample_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_dim: usize,
    pub resample_each_epoch: bool,
    pub folds: usize,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let sampler = SamplerConfig::default();
        ExperimentConfig {
            task: Role::Boundary,
            model: ModelSpec::Sage {
                sampler: SamplerStrategy::Top,
                features: FeatureStrategy::Topology,
            },
            tsm: TsmConfig::default(),
            resolution: 1.0,
            neighbor_direction: NeighborDirection::Either,
            sample_direction: SampleDirection::Out,
            depth: sampler.depth,
            sample_size: sampler.sample_size,
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            batch_size: train.batch_size,
            hidden_dim: train.hidden_dim,
            resample_each_epoch: train.resample_each_epoch,
            folds: SplitPlan::default().folds,
            master_seed: 0,
        }
    }
}

/// Per-stage seeds derived from the master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSchedule {
    pub master: u64,
    pub louvain: u64,
    pub splits: u64,
    /// Fold `f` trains with `derive_index(train, f)`.
    pub train: u64,
    /// Fold `f` samples test neighborhoods with `derive_index(predict, f)`.
    pub predict: u64,
    /// Fold `f` balances baseline training data with `derive_index(undersample, f)`.
    pub undersample: u64,
}

impl SeedSchedule {
    pub fn new(master: u64) -> Self {
        SeedSchedule {
            master,
            louvain: seed::derive(master, "louvain"),
            splits: seed::derive(master, "splits"),
            train: seed::derive(master, "train"),
            predict: seed::derive(master, "predict"),
            undersample: seed::derive(master, "undersample"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Tsm,
    Communities,
    Cha,
    Featurize,
    Label,
    Split,
    Train,
    Predict,
    Metrics,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Tsm => "tsm",
            Stage::Communities => "communities",
            Stage::Cha => "cha",
            Stage::Featurize => "featurize",
            Stage::Label => "label",
            Stage::Split => "split",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Metrics => "metrics",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentError {
    InvalidConfig(&'static str),
    Trust(TrustError),
    Community(Stage, CommunityError),
    Feature(FeatureError),
    Label(SynthError),
    Eval(Stage, EvalError),
    Model {
        stage: Stage,
        fold: usize,
        error: ModelError,
    },
    Baseline {
        stage: Stage,
        fold: usize,
        error: BaselineError,
    },
}

impl ExperimentError {
    pub fn stage(&self) -> Option<Stage> {
        Some(match self {
            ExperimentError::InvalidConfig(_) => return None,
            ExperimentError::Trust(_) => Stage::Tsm,
            ExperimentError::Community(s, _) | ExperimentError::Eval(s, _) => *s,
            ExperimentError::Feature(_) => Stage::Featurize,
            ExperimentError::Label(_) => Stage::Label,
            ExperimentError::Model { stage, .. } | ExperimentError::Baseline { stage, .. } => *stage,
        })
    }

    /// Whether the input was well-formed but violates a module contract
    /// (too few examples, single-class data).
    pub fn is_contract_refusal(&self) -> bool {
        matches!(
            self,
            ExperimentError::Eval(_, EvalError::TooFewExamples { .. } | EvalError::SingleClassFold { .. })
                | ExperimentError::Model {
                    error: ModelError::InsufficientClass { .. },
                    ..
                }
                | ExperimentError::Baseline {
                    error: BaselineError::InsufficientClass { .. },
                    ..
                }
        )
    }
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(stage) = self.stage() {
            write!(f, "[{}] ", stage.as_str())?;
        }
        match self {
            ExperimentError::InvalidConfig(msg) => write!(f, "invalid experiment configuration: {msg}"),
            ExperimentError::Trust(e) => write!(f, "{e}"),
            ExperimentError::Community(_, e) => write!(f, "{e}"),
            ExperimentError::Feature(e) => write!(f, "{e}"),
            ExperimentError::Label(e) => write!(f, "{e}"),
            ExperimentError::Eval(_, e) => write!(f, "{e}"),
            ExperimentError::Model { fold, error, .. } => write!(f, "fold {fold}: {error}"),
            ExperimentError::Baseline { fold, error, .. } => write!(f, "fold {fold}: {error}"),
        }
    }
}

impl core::error::Error for ExperimentError {}

/// Everything computed before the labeled examples are split.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub scores: TrustScores,
    pub believability: BelievabilityScores,
    pub partition: CommunityPartition,
    pub cha: ChaPartition,
    pub datasets: LabeledDatasets,
}

/// Trust scores, believability, Louvain communities, roles and labels.
pub fn prepare(
    g: &DirectedGraph,
    trace: &CascadeTrace,
    cfg: &ExperimentConfig,
    seeds: &SeedSchedule,
) -> Result<Prepared, ExperimentError> {
    let scores = compute_tsm(g, &cfg.tsm).map_err(ExperimentError::Trust)?;
    let believability = compute_believability(g, &scores).map_err(ExperimentError::Trust)?;
    let louvain_cfg = LouvainConfig {
        resolution: cfg.resolution,
        seed: seeds.louvain,
        ..LouvainConfig::default()
    };
    let partition = louvain(g, &louvain_cfg).map_err(|e| ExperimentError::Community(Stage::Communities, e))?;
    let cha =
        cha_partition(g, &partition, cfg.neighbor_direction).map_err(|e| ExperimentError::Community(Stage::Cha, e))?;
    let datasets = make_labeled_dataset(trace, &cha).map_err(ExperimentError::Label)?;
    Ok(Prepared {
        scores,
        believability,
        partition,
        cha,
        datasets,
    })
}

/// Sampling distribution for a SAGE sampler strategy.
pub fn sampling_weights(
    g: &DirectedGraph,
    bel: &BelievabilityScores,
    activity: Option<&ActivityTable>,
    strategy: SamplerStrategy,
    direction: SampleDirection,
) -> Result<SamplingWeights, FeatureError> {
    match strategy {
        // uniform mode draws over all candidates, so the weights only fix the candidate sets
        SamplerStrategy::Top | SamplerStrategy::Rand => believability_weights(g, bel, direction),
        SamplerStrategy::Act => {
            let table = activity.ok_or(FeatureError::MissingActivity)?;
            let (raw, _) = table.edge_weights(g);
            normalize_weights(g, &raw, WeightSource::RetweetCounts, direction)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FoldModel {
    Sage {
        best_epoch: usize,
        final_train_loss: f64,
        best_val_loss: Option<f64>,
    },
    Baseline(ThresholdModel),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldDetail {
    pub fold: usize,
    /// Training examples after balancing.
    pub train_size: usize,
    pub train_spreaders: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub test_spreaders: usize,
    pub model: FoldModel,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub tsm_iterations: u32,
    pub tsm_converged: bool,
    pub communities: usize,
    pub modularity: f64,
    pub boundary_nodes: usize,
    pub core_nodes: usize,
    pub examples: usize,
    pub spreaders: usize,
    /// Nodes whose features were zero-filled (empty or missing timelines).
    pub flagged_features: usize,
    /// Nodes with neighbors but zero sampling mass.
    pub flagged_weights: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub model: alloc::string::String,
    pub seeds: SeedSchedule,
    pub stats: StageStats,
    pub metrics: MetricsReport,
    pub folds: Vec<FoldDetail>,
}

fn labels_of(examples: &[LabeledExample]) -> Vec<Label> {
    examples.iter().map(|e| e.label).collect()
}

fn nodes_of(examples: &[LabeledExample]) -> Vec<NodeId> {
    examples.iter().map(|e| e.node).collect()
}

pub fn run_experiment(
    g: &DirectedGraph,
    activity: Option<&ActivityTable>,
    trace: &CascadeTrace,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    if trace.node_count() != g.node_count() {
        return Err(ExperimentError::InvalidConfig(
            "trace and graph cover different node counts",
        ));
    }
    if cfg.model.needs_activity() && activity.is_none() {
        return Err(ExperimentError::Feature(FeatureError::MissingActivity));
    }
    let seeds = SeedSchedule::new(cfg.master_seed);
    let prepared = prepare(g, trace, cfg, &seeds)?;
    let features = build_features(&prepared.scores, activity, cfg.model.features(), g.node_count())
        .map_err(ExperimentError::Feature)?;
    let examples = prepared.datasets.for_role(cfg.task);

    let mut stats = StageStats {
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        tsm_iterations: prepared.scores.iterations_run,
        tsm_converged: prepared.scores.converged,
        communities: prepared.partition.community_count,
        modularity: prepared.partition.modularity,
        boundary_nodes: prepared.datasets.boundary.len(),
        core_nodes: prepared.datasets.core.len(),
        examples: examples.len(),
        spreaders: examples.iter().filter(|e| e.label.is_spreader()).count(),
        flagged_features: features.flagged.len(),
        flagged_weights: 0,
    };

    let splits = make_splits(
        examples,
        &SplitPlan {
            folds: cfg.folds,
            seed: seeds.splits,
        },
    )
    .map_err(|e| ExperimentError::Eval(Stage::Split, e))?;

    let weights = match cfg.model {
        ModelSpec::Sage { sampler, .. } => {
            let w = sampling_weights(g, &prepared.believability, activity, sampler, cfg.sample_direction)
                .map_err(ExperimentError::Feature)?;
            stats.flagged_weights = w.flagged.len();
            Some((w, sampler))
        }
        ModelSpec::Baseline { .. } => None,
    };

    let mut fold_metrics = Vec::with_capacity(splits.len());
    let mut details = Vec::with_capacity(splits.len());
    for split in &splits {
        let fold = split.fold;
        let (predicted, detail_model, train_size, train_spreaders) = match (&cfg.model, &weights) {
            (ModelSpec::Sage { .. }, Some((w, strategy))) => {
                run_sage_fold(cfg, &seeds, split, w, *strategy, &features)?
            }
            (ModelSpec::Baseline { baseline, .. }, _) => run_baseline_fold(&seeds, split, *baseline, &features)?,
            (ModelSpec::Sage { .. }, None) => unreachable!("weights are built for every sage model"),
        };
        let (counts, metrics) = compute_metrics(&predicted, &labels_of(&split.test))
            .map_err(|e| ExperimentError::Eval(Stage::Metrics, e))?;
        fold_metrics.push(FoldMetrics { fold, counts, metrics });
        details.push(FoldDetail {
            fold,
            train_size,
            train_spreaders,
            val_size: split.val.len(),
            test_size: split.test.len(),
            test_spreaders: split.test.iter().filter(|e| e.label.is_spreader()).count(),
            model: detail_model,
        });
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        model: cfg.model.label(),
        seeds,
        stats,
        metrics: MetricsReport::from_folds(fold_metrics),
        folds: details,
    })
}

type FoldOutcome = (Vec<Label>, FoldModel, usize, usize);

fn run_sage_fold(
    cfg: &ExperimentConfig,
    seeds: &SeedSchedule,
    split: &crate::eval::FoldSplit,
    weights: &SamplingWeights,
    strategy: SamplerStrategy,
    features: &FeatureMatrix,
) -> Result<FoldOutcome, ExperimentError> {
    let fold = split.fold;
    let sampler_cfg = SamplerConfig {
        depth: cfg.depth,
        sample_size: cfg.sample_size,
        mode: if strategy == SamplerStrategy::Rand {
            SamplerMode::Uniform
        } else {
            SamplerMode::Weighted
        },
        seed: seed::derive_index(seeds.predict, fold as u64),
    };
    let train_cfg = TrainConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: seed::derive_index(seeds.train, fold as u64),
        hidden_dim: cfg.hidden_dim,
        resample_each_epoch: cfg.resample_each_epoch,
        ..TrainConfig::default()
    };
    let model_err = |stage| move |error| ExperimentError::Model { stage, fold, error };
    let outcome = train(&split.train, &split.val, weights, features, &sampler_cfg, &train_cfg)
        .map_err(model_err(Stage::Train))?;
    let predictions = predict(&nodes_of(&split.test), &outcome.params, weights, features, &sampler_cfg)
        .map_err(model_err(Stage::Predict))?;
    let best_val_loss = outcome.log[outcome.best_epoch].val_loss;
    let final_train_loss = outcome.log.last().map_or(f64::NAN, |l| l.train_loss);
    Ok((
        predictions.iter().map(|p| p.label).collect(),
        FoldModel::Sage {
            best_epoch: outcome.best_epoch,
            final_train_loss,
            best_val_loss,
        },
        outcome.train_spreaders + outcome.train_non_spreaders,
        outcome.train_spreaders,
    ))
}

fn run_baseline_fold(
    seeds: &SeedSchedule,
    split: &crate::eval::FoldSplit,
    kind: BaselineKind,
    features: &FeatureMatrix,
) -> Result<FoldOutcome, ExperimentError> {
    let fold = split.fold;
    let balanced = undersample(&split.train, seed::derive_index(seeds.undersample, fold as u64));
    let err = |stage| move |error| ExperimentError::Baseline { stage, fold, error };
    let model = fit_threshold(&balanced, features, kind).map_err(err(Stage::Train))?;
    let predicted = predict_threshold(&model, features, &nodes_of(&split.test)).map_err(err(Stage::Predict))?;
    let spreaders = balanced.iter().filter(|e| e.label.is_spreader()).count();
    Ok((predicted, FoldModel::Baseline(model), balanced.len(), spreaders))
}
