//! Command-line interface.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use spreader_core::baselines::{fit_threshold, predict_threshold, BaselineKind};
use spreader_core::community::{cha_partition, louvain, CommunityPartition, LouvainConfig};
use spreader_core::eval::{compute_metrics, make_splits, SplitPlan};
use spreader_core::experiment::{
    prepare, run_experiment, sampling_weights, ExperimentConfig, SamplerStrategy, SeedSchedule,
};
use spreader_core::features::{build_features, ActivityTable, FeatureMatrix, FeatureStrategy};
use spreader_core::labels::{undersample, Label, LabeledExample};
use spreader_core::sage::{predict, threshold_label, train, Prediction, TrainConfig};
use spreader_core::sampler::{sample, SamplerConfig, SamplerMode};
use spreader_core::seed;
use spreader_core::synth::CascadeTrace;
use spreader_core::tsm::{compute_believability, compute_tsm, BelievabilityScores, TrustScores};
use spreader_core::DirectedGraph;

use crate::config::{ModelKind, Settings};
use crate::error::{Error, Result};
use crate::io;
use crate::report::{Checkpoint, CheckpointModel, Dims, RunReport, Timing};
use crate::scenario::build_scenario;

#[derive(Debug, Parser)]
#[command(
    name = "spreader",
    version,
    about = "Predict which community members will spread a message"
)]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the configuration file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Extra `key=value` settings applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

/// Input files shared by most subcommands.
#[derive(Debug, Default, Args)]
pub struct Inputs {
    /// Edge list, `follower<TAB>followee[<TAB>weight]`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Cascade trace, `node<TAB>status<TAB>round`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Activity CSV, `node,n_t,retweet_count,times_retweeted_total`.
    #[arg(long)]
    pub activity: Option<PathBuf>,
    /// Retweet-pair CSV, `x,v,rt_count`.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trust scores and per-edge believability.
    Tsm {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Louvain communities.
    Communities {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Boundary, core and neighbor roles per community.
    Cha {
        #[command(flatten)]
        inputs: Inputs,
        /// Use this `node<TAB>community` assignment instead of running Louvain.
        #[arg(long)]
        communities: Option<PathBuf>,
    },
    /// Node features and neighbor sampling weights.
    Featurize {
        #[command(flatten)]
        inputs: Inputs,
        /// `sampler/features`, e.g. `top/top` or `act/act`.
        #[arg(long)]
        strategy: Option<String>,
        /// Previously computed trust scores.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Print one sampled neighborhood.
    Sample {
        #[command(flatten)]
        inputs: Inputs,
        /// Root node label.
        #[arg(long)]
        root: String,
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Generate a synthetic graph, cascade and activity records.
    Synth,
    /// Fit a model on the first fold and write a checkpoint.
    Train {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        strategy: Option<String>,
        /// `sage`, `trusting`, `trusted` or `interpolation`.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value = "model.json")]
        checkpoint: PathBuf,
    },
    /// Label nodes with a trained checkpoint.
    Predict {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Node labels to predict, one per line (default: every node).
        #[arg(long)]
        nodes: Option<PathBuf>,
    },
    /// Cross-validate a threshold baseline.
    Baseline {
        #[command(flatten)]
        inputs: Inputs,
        /// `trusting`, `trusted` or `interpolation`.
        #[arg(long, default_value = "interpolation")]
        kind: String,
        #[arg(long)]
        features: Option<String>,
    },
    /// Cross-validate the configured model, or score a predictions file.
    Evaluate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// Score these predictions against the trace instead of training.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Synthesize a world and cross-validate on it, writing every artifact.
    Pipeline {
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        model: Option<String>,
    },
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    if let Some(seed) = cli.seed {
        s.experiment.master_seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        s.paths.out_dir = dir.clone();
    }
    for pair in &cli.overrides {
        s.set_pair(pair)?;
    }
    Ok(s)
}

fn apply_inputs(s: &mut Settings, inputs: &Inputs) {
    let slots = [
        (&inputs.graph, &mut s.paths.graph),
        (&inputs.trace, &mut s.paths.trace),
        (&inputs.activity, &mut s.paths.activity),
        (&inputs.pairs, &mut s.paths.pairs),
    ];
    for (given, slot) in slots {
        if let Some(p) = given {
            *slot = Some(p.clone());
        }
    }
}

/// Applies `sampler/features`.
fn apply_strategy(s: &mut Settings, strategy: Option<&str>) -> Result<()> {
    if let Some(strategy) = strategy {
        let (sampler, features) = strategy
            .split_once('/')
            .ok_or_else(|| Error::Config(format!("strategy {strategy:?} is not sampler/features")))?;
        s.set("sampler", sampler)?;
        s.set("features", features)?;
    }
    Ok(())
}

fn apply_model(s: &mut Settings, model: Option<&str>) -> Result<()> {
    match model {
        Some(m) => s.set("model", m),
        None => Ok(()),
    }
}

struct Loaded {
    graph: DirectedGraph,
    activity: Option<ActivityTable>,
}

fn load(s: &Settings) -> Result<Loaded> {
    let path = s.require(&s.paths.graph, "graph")?;
    let (graph, stats) = io::load_edge_list(path, s.default_weight)?;
    info!(
        "loaded {} nodes, {} edges from {} rows",
        graph.node_count(),
        graph.edge_count(),
        stats.rows
    );
    if stats.self_loops > 0 || stats.duplicates > 0 {
        warn!(
            "skipped {} self-loops and {} duplicate edges",
            stats.self_loops, stats.duplicates
        );
    }
    let activity = match &s.paths.activity {
        Some(p) => Some(io::read_activity(&graph, p, s.paths.pairs.as_deref())?),
        None => None,
    };
    Ok(Loaded { graph, activity })
}

fn load_trace(s: &Settings, g: &DirectedGraph) -> Result<CascadeTrace> {
    io::read_trace(g, s.require(&s.paths.trace, "trace")?)
}

fn trust(g: &DirectedGraph, cfg: &ExperimentConfig) -> Result<(TrustScores, BelievabilityScores)> {
    let scores = compute_tsm(g, &cfg.tsm)?;
    if !scores.converged {
        warn!("trust scores did not converge in {} iterations", scores.iterations_run);
    }
    let bel = compute_believability(g, &scores)?;
    Ok((scores, bel))
}

fn partition(g: &DirectedGraph, cfg: &ExperimentConfig) -> Result<CommunityPartition> {
    let louvain_cfg = LouvainConfig {
        resolution: cfg.resolution,
        seed: SeedSchedule::new(cfg.master_seed).louvain,
        ..LouvainConfig::default()
    };
    Ok(louvain(g, &louvain_cfg)?)
}

fn sampler_config(cfg: &ExperimentConfig, strategy: SamplerStrategy, seed_value: u64) -> SamplerConfig {
    SamplerConfig {
        depth: cfg.depth,
        sample_size: cfg.sample_size,
        mode: if strategy == SamplerStrategy::Rand {
            SamplerMode::Uniform
        } else {
            SamplerMode::Weighted
        },
        seed: seed_value,
    }
}

fn features(
    g: &DirectedGraph,
    scores: &TrustScores,
    activity: Option<&ActivityTable>,
    strategy: FeatureStrategy,
) -> Result<FeatureMatrix> {
    let x = build_features(scores, activity, strategy, g.node_count())?;
    if !x.flagged.is_empty() {
        warn!(
            "{} nodes have no usable activity ({} without a record); their features are zero",
            x.flagged.len(),
            x.missing_records
        );
    }
    Ok(x)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn run(cli: Cli) -> Result<()> {
    let mut s = settings(&cli)?;
    match &cli.command {
        Command::Tsm { inputs } => {
            apply_inputs(&mut s, inputs);
            let data = load(&s)?;
            let (scores, bel) = trust(&data.graph, &s.experiment)?;
            info!("trust scores after {} iterations", scores.iterations_run);
            io::write_trust_scores(&data.graph, &scores, &s.out_path("trust_scores.tsv"))?;
            io::write_believability(&data.graph, &bel, &s.out_path("believability.tsv"))?;
        }
        Command::Communities { inputs } => {
            apply_inputs(&mut s, inputs);
            let data = load(&s)?;
            let p = partition(&data.graph, &s.experiment)?;
            info!("{} communities, modularity {:.4}", p.community_count, p.modularity);
            io::write_communities(&data.graph, &p.assignment, &s.out_path("communities.tsv"))?;
        }
        Command::Cha { inputs, communities } => {
            apply_inputs(&mut s, inputs);
            let data = load(&s)?;
            let p = match communities {
                Some(path) => {
                    let a = io::read_communities(&data.graph, path)?;
                    CommunityPartition::from_assignment(&data.graph, &a, s.experiment.resolution)?
                }
                None => partition(&data.graph, &s.experiment)?,
            };
            let cha = cha_partition(&data.graph, &p, s.experiment.neighbor_direction)?;
            info!(
                "{} boundary and {} core nodes",
                cha.boundary_nodes().len(),
                cha.core_nodes().len()
            );
            io::write_cha(&data.graph, &cha, &s.out_path("cha.tsv"))?;
        }
        Command::Featurize {
            inputs,
            strategy,
            scores,
        } => {
            apply_inputs(&mut s, inputs);
            apply_strategy(&mut s, strategy.as_deref())?;
            let data = load(&s)?;
            let (scores, bel) = match scores {
                Some(path) => {
                    let sc = io::read_trust_scores(&data.graph, path)?;
                    let bel = compute_believability(&data.graph, &sc)?;
                    (sc, bel)
                }
                None => trust(&data.graph, &s.experiment)?,
            };
            let x = features(&data.graph, &scores, data.activity.as_ref(), s.features)?;
            let w = sampling_weights(
                &data.graph,
                &bel,
                data.activity.as_ref(),
                s.sampler,
                s.experiment.sample_direction,
            )?;
            if !w.flagged.is_empty() {
                warn!("{} nodes have neighbors but zero sampling mass", w.flagged.len());
            }
            io::write_features(&data.graph, &x, &s.out_path("features.tsv"))?;
            io::write_sampling_weights(&data.graph, &w, &s.out_path("sampling_weights.tsv"))?;
        }
        Command::Sample { inputs, root, strategy } => {
            apply_inputs(&mut s, inputs);
            apply_strategy(&mut s, strategy.as_deref())?;
            let data = load(&s)?;
            let root = io::NodeLookup::new(&data.graph)
                .get(root)
                .ok_or_else(|| Error::UnknownNode {
                    path: s.paths.graph.clone().unwrap_or_default(),
                    label: root.clone(),
                })?;
            let (_, bel) = trust(&data.graph, &s.experiment)?;
            let w = sampling_weights(
                &data.graph,
                &bel,
                data.activity.as_ref(),
                s.sampler,
                s.experiment.sample_direction,
            )?;
            let cfg = sampler_config(
                &s.experiment,
                s.sampler,
                seed::derive(s.experiment.master_seed, "sample"),
            );
            let nbh = sample(root, &w, &cfg)?;
            let mut out = std::io::stdout().lock();
            io::write_neighborhood(&data.graph, &nbh, &mut out)
                .and_then(|()| out.flush())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
        Command::Synth => {
            synth(&s)?;
        }
        Command::Train {
            inputs,
            strategy,
            model,
            checkpoint,
        } => {
            apply_inputs(&mut s, inputs);
            apply_strategy(&mut s, strategy.as_deref())?;
            apply_model(&mut s, model.as_deref())?;
            train_checkpoint(&s, checkpoint)?;
        }
        Command::Predict {
            inputs,
            checkpoint,
            nodes,
        } => {
            apply_inputs(&mut s, inputs);
            predict_checkpoint(&s, checkpoint, nodes.as_deref())?;
        }
        Command::Baseline { inputs, kind, features } => {
            apply_inputs(&mut s, inputs);
            let kind: BaselineKind = kind.parse()?;
            s.set("model", kind.as_str())?;
            if let Some(f) = features {
                s.set("features", f)?;
            }
            evaluate(&s)?;
        }
        Command::Evaluate {
            inputs,
            strategy,
            model,
            predictions,
        } => {
            apply_inputs(&mut s, inputs);
            apply_strategy(&mut s, strategy.as_deref())?;
            apply_model(&mut s, model.as_deref())?;
            match predictions {
                Some(path) => score_predictions(&s, path)?,
                None => evaluate(&s)?,
            }
        }
        Command::Pipeline { strategy, model } => {
            apply_strategy(&mut s, strategy.as_deref())?;
            apply_model(&mut s, model.as_deref())?;
            let files = synth(&s)?;
            s.paths.graph = Some(s.out_path("graph.tsv"));
            s.paths.trace = Some(s.out_path("trace.tsv"));
            s.paths.activity = Some(s.out_path("activity.csv"));
            s.paths.pairs = Some(s.out_path("pairs.csv"));
            let mut artifacts = files;
            let data = load(&s)?;
            let cfg = s.experiment();
            let trace = load_trace(&s, &data.graph)?;
            let prepared = prepare(&data.graph, &trace, &cfg, &SeedSchedule::new(cfg.master_seed))?;
            let x = features(&data.graph, &prepared.scores, data.activity.as_ref(), s.features)?;
            let outputs = [
                ("communities", "communities.tsv"),
                ("cha", "cha.tsv"),
                ("features", "features.tsv"),
            ];
            io::write_communities(&data.graph, &prepared.partition.assignment, &s.out_path(outputs[0].1))?;
            io::write_cha(&data.graph, &prepared.cha, &s.out_path(outputs[1].1))?;
            io::write_features(&data.graph, &x, &s.out_path(outputs[2].1))?;
            for (k, f) in outputs {
                artifacts.insert(k.to_owned(), f.to_owned());
            }
            run_and_report(&s, &data, &trace, artifacts)?;
        }
    }
    Ok(())
}

/// Writes the synthetic world into the output directory and returns the
/// artifact map.
fn synth(s: &Settings) -> Result<BTreeMap<String, String>> {
    let sc = build_scenario(&s.synth, &s.experiment, s.experiment.master_seed)?;
    let g = &sc.graph;
    let files = [
        ("graph", "graph.tsv"),
        ("planted", "planted.tsv"),
        ("trust_scores", "trust_scores.tsv"),
        ("believability", "believability.tsv"),
        ("trace", "trace.tsv"),
        ("activity", "activity.csv"),
        ("pairs", "pairs.csv"),
        ("synth", "synth.json"),
    ];
    io::save_edge_list(g, &s.out_path("graph.tsv"))?;
    io::write_communities(g, &sc.planted, &s.out_path("planted.tsv"))?;
    io::write_trust_scores(g, &sc.scores, &s.out_path("trust_scores.tsv"))?;
    io::write_believability(g, &sc.believability, &s.out_path("believability.tsv"))?;
    io::write_trace(g, &sc.trace, &s.out_path("trace.tsv"))?;
    io::write_activity(
        g,
        &sc.activity,
        &s.out_path("activity.csv"),
        Some(&s.out_path("pairs.csv")),
    )?;
    let summary = serde_json::json!({
        "settings": s.synth,
        "master_seed": s.experiment.master_seed,
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "beta": sc.beta,
        "spreaders": sc.trace.spreaders().len(),
        "boundary_spreader_fraction": sc.boundary_spreader_fraction,
    });
    io::write_json(&summary, &s.out_path("synth.json"))?;
    println!(
        "{} nodes, {} edges, beta {:.6}, boundary spreader fraction {:.3}",
        g.node_count(),
        g.edge_count(),
        sc.beta,
        sc.boundary_spreader_fraction
    );
    Ok(files.iter().map(|(k, f)| ((*k).to_owned(), (*f).to_owned())).collect())
}

fn evaluate(s: &Settings) -> Result<()> {
    let data = load(s)?;
    let trace = load_trace(s, &data.graph)?;
    let mut artifacts = BTreeMap::new();
    for (key, path) in [
        ("graph", &s.paths.graph),
        ("trace", &s.paths.trace),
        ("activity", &s.paths.activity),
    ] {
        if let Some(p) = path {
            artifacts.insert(key.to_owned(), p.display().to_string());
        }
    }
    run_and_report(s, &data, &trace, artifacts)
}

fn run_and_report(
    s: &Settings,
    data: &Loaded,
    trace: &CascadeTrace,
    artifacts: BTreeMap<String, String>,
) -> Result<()> {
    let cfg = s.experiment();
    let started = SystemTime::now();
    let clock = Instant::now();
    let report = run_experiment(&data.graph, data.activity.as_ref(), trace, &cfg)?;
    let run = RunReport {
        experiment: report,
        artifacts,
        timing: Timing::new(started, clock.elapsed()),
    };
    let path = s.out_path("report.json");
    io::write_json(&run, &path)?;
    let m = run.experiment.metrics.mean;
    println!(
        "{} {}: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} ({})",
        run.experiment.model,
        match cfg.task {
            spreader_core::community::Role::Boundary => "boundary",
            spreader_core::community::Role::Core => "core",
        },
        m.accuracy,
        m.precision,
        m.recall,
        m.f1,
        file_name(&path)
    );
    Ok(())
}

/// Labeled examples of the configured task and the first fold's split.
fn first_fold(
    g: &DirectedGraph,
    trace: &CascadeTrace,
    cfg: &ExperimentConfig,
) -> Result<(spreader_core::experiment::Prepared, spreader_core::eval::FoldSplit)> {
    let seeds = SeedSchedule::new(cfg.master_seed);
    let prepared = prepare(g, trace, cfg, &seeds)?;
    let examples = prepared.datasets.for_role(cfg.task);
    let plan = SplitPlan {
        folds: cfg.folds,
        seed: seeds.splits,
    };
    let split = make_splits(examples, &plan)?.swap_remove(0);
    Ok((prepared, split))
}

fn train_checkpoint(s: &Settings, path: &Path) -> Result<()> {
    let data = load(s)?;
    let trace = load_trace(s, &data.graph)?;
    let cfg = s.experiment();
    let seeds = SeedSchedule::new(cfg.master_seed);
    let (prepared, split) = first_fold(&data.graph, &trace, &cfg)?;
    let x = features(&data.graph, &prepared.scores, data.activity.as_ref(), s.features)?;
    let model = match s.model {
        ModelKind::Sage => {
            let w = sampling_weights(
                &data.graph,
                &prepared.believability,
                data.activity.as_ref(),
                s.sampler,
                cfg.sample_direction,
            )?;
            let sampler_cfg = sampler_config(&cfg, s.sampler, seed::derive_index(seeds.predict, 0));
            let train_cfg = TrainConfig {
                learning_rate: cfg.learning_rate,
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                seed: seed::derive_index(seeds.train, 0),
                hidden_dim: cfg.hidden_dim,
                resample_each_epoch: cfg.resample_each_epoch,
                ..TrainConfig::default()
            };
            let outcome = train(&split.train, &split.val, &w, &x, &sampler_cfg, &train_cfg)?;
            let test = predict(&nodes(&split.test), &outcome.params, &w, &x, &sampler_cfg)?;
            log_holdout(&split.test, &test.iter().map(|p| p.label).collect::<Vec<_>>())?;
            info!("best validation loss at epoch {}", outcome.best_epoch);
            CheckpointModel::Sage {
                sampler: s.sampler,
                sample_direction: cfg.sample_direction,
                sampler_config: sampler_cfg,
                train_config: train_cfg,
                dims: Dims {
                    input: outcome.params.input_dim(),
                    hidden: outcome.params.hidden_dim(),
                    depth: outcome.params.depth(),
                },
                params: outcome.params,
            }
        }
        _ => {
            let spec = s.model_spec();
            let kind = match spec {
                spreader_core::experiment::ModelSpec::Baseline { baseline, .. } => baseline,
                spreader_core::experiment::ModelSpec::Sage { .. } => unreachable!("handled above"),
            };
            let balanced = undersample(&split.train, seed::derive_index(seeds.undersample, 0));
            let model = fit_threshold(&balanced, &x, kind)?;
            log_holdout(&split.test, &predict_threshold(&model, &x, &nodes(&split.test))?)?;
            CheckpointModel::Baseline { model }
        }
    };
    let checkpoint = Checkpoint::new(s.features, model);
    let out = s.out_path(&path.to_string_lossy());
    io::write_json(&checkpoint, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn nodes(examples: &[LabeledExample]) -> Vec<spreader_core::NodeId> {
    examples.iter().map(|e| e.node).collect()
}

fn log_holdout(test: &[LabeledExample], predicted: &[Label]) -> Result<()> {
    let truth: Vec<Label> = test.iter().map(|e| e.label).collect();
    let (_, m) = compute_metrics(predicted, &truth)?;
    println!(
        "held-out fold: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
        m.accuracy, m.precision, m.recall, m.f1
    );
    Ok(())
}

fn predict_checkpoint(s: &Settings, path: &Path, node_file: Option<&Path>) -> Result<()> {
    let checkpoint: Checkpoint = io::read_json(path)?;
    checkpoint.check()?;
    let data = load(s)?;
    let (scores, bel) = trust(&data.graph, &s.experiment)?;
    let x = features(&data.graph, &scores, data.activity.as_ref(), checkpoint.features)?;
    let targets = match node_file {
        Some(p) => io::read_node_list(&data.graph, p)?,
        None => data.graph.nodes().collect(),
    };
    let predictions: Vec<Prediction> = match &checkpoint.model {
        CheckpointModel::Sage {
            sampler,
            sample_direction,
            sampler_config,
            params,
            ..
        } => {
            let w = sampling_weights(&data.graph, &bel, data.activity.as_ref(), *sampler, *sample_direction)?;
            predict(&targets, params, &w, &x, sampler_config)?
        }
        CheckpointModel::Baseline { model } => {
            let labels = predict_threshold(model, &x, &targets)?;
            targets
                .iter()
                .zip(labels)
                .map(|(&node, label)| Prediction {
                    node,
                    spreader_probability: if label.is_spreader() { 1.0 } else { 0.0 },
                    label,
                })
                .collect()
        }
    };
    debug_assert!(predictions
        .iter()
        .all(|p| p.label == threshold_label(p.spreader_probability)));
    let out = s.out_path("predictions.tsv");
    io::write_predictions(&data.graph, &predictions, &out)?;
    println!("{} predictions written to {}", predictions.len(), out.display());
    Ok(())
}

fn score_predictions(s: &Settings, path: &Path) -> Result<()> {
    let data = load(s)?;
    let trace = load_trace(s, &data.graph)?;
    let rows = io::read_predictions(&data.graph, path)?;
    let predicted: Vec<Label> = rows.iter().map(|r| r.1).collect();
    let truth: Vec<Label> = rows
        .iter()
        .map(|r| Label::from_spreader(trace.is_spreader(r.0)))
        .collect();
    let (counts, m) = compute_metrics(&predicted, &truth)?;
    let doc = serde_json::json!({ "predictions": file_name(path), "counts": counts, "metrics": m });
    io::write_json(&doc, &s.out_path("metrics.json"))?;
    println!(
        "accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
        m.accuracy, m.precision, m.recall, m.f1
    );
    Ok(())
}
