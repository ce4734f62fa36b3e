//! Flat `key = value` configuration.
//!
//! One setting per line; `#` starts a comment; keys are case-sensitive.
//! Command-line flags are applied after the file and win over it.
//!
//! | key | values | default |
//! |---|---|---|
//! | `graph` | edge list path | none |
//! | `trace` | cascade trace path | none |
//! | `activity` | activity CSV path | none |
//! | `pairs` | retweet-pair CSV path | none |
//! | `out_dir` | output directory | `.` |
//! | `default_weight` | weight for two-column edge rows | `1` |
//! | `seed` | master seed | `0` |
//! | `task` | `boundary`, `core` | `boundary` |
//! | `model` | `sage`, `trusting`, `trusted`, `interpolation` | `sage` |
//! | `sampler` | `top`, `act`, `rand` | `top` |
//! | `features` | `top`, `act` | `top` |
//! | `involvement` | TSM exponent in (0, 1] | `0.391` |
//! | `tsm_max_iterations` | iteration cap | `100` |
//! | `tsm_epsilon` | L-infinity stopping threshold | `1e-6` |
//! | `tsm_initial_score` | starting ti and tw | `1` |
//! | `resolution` | Louvain resolution | `1` |
//! | `neighbor_direction` | `either`, `in`, `out` | `either` |
//! | `sample_direction` | `out`, `in` | `out` |
//! | `depth` | sampling depth | `1` |
//! | `sample_size` | neighbors drawn per node | `25` |
//! | `learning_rate` | SGD step | `0.001` |
//! | `epochs` | training epochs | `100` |
//! | `batch_size` | minibatch size | `64` |
//! | `hidden_dim` | embedding width | `128` |
//! | `resample_each_epoch` | `true`, `false` | `true` |
//! | `folds` | cross-validation folds (at most 5) | `5` |
//! | `communities` | synthetic block count | `20` |
//! | `community_size` | nodes per block | `250` |
//! | `p_in` | within-block edge probability | `0.2` |
//! | `p_out` | cross-block edge probability | `0.01` |
//! | `seeds_per_community` | cascade seeds per block | `5` |
//! | `beta` | cascade scale, or `auto` to calibrate | `auto` |
//! | `target_low`, `target_high` | boundary spreader window for `auto` | `0.10`, `0.20` |
//! | `timeline_size` | synthetic statuses per node | `10` |
//! | `trials` | synthetic retweet trials per edge | `3` |

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use spreader_core::baselines::BaselineKind;
use spreader_core::community::{NeighborDirection, Role};
use spreader_core::experiment::{ExperimentConfig, ModelSpec, SamplerStrategy};
use spreader_core::features::{FeatureStrategy, SampleDirection};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sage,
    Trusting,
    Trusted,
    Interpolation,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sage" => Ok(ModelKind::Sage),
            "trusting" => Ok(ModelKind::Trusting),
            "trusted" => Ok(ModelKind::Trusted),
            "interpolation" => Ok(ModelKind::Interpolation),
            _ => Err(Error::Config(format!(
                "model must be sage, trusting, trusted or interpolation, not {s:?}"
            ))),
        }
    }
}

/// Cascade scale: fixed, or bisected to hit a boundary spreader window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Beta {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthSettings {
    pub communities: usize,
    pub community_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seeds_per_community: usize,
    pub beta: Beta,
    pub target_low: f64,
    pub target_high: f64,
    pub timeline_size: u32,
    pub trials: u32,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            communities: 20,
            community_size: 250,
            p_in: 0.2,
            p_out: 0.01,
            seeds_per_community: 5,
            beta: Beta::Auto,
            target_low: 0.10,
            target_high: 0.20,
            timeline_size: 10,
            trials: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Paths {
    pub graph: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub activity: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            graph: None,
            trace: None,
            activity: None,
            pairs: None,
            out_dir: PathBuf::from("."),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub paths: Paths,
    pub default_weight: f64,
    pub model: ModelKind,
    pub sampler: SamplerStrategy,
    pub features: FeatureStrategy,
    pub experiment: ExperimentConfig,
    pub synth: SynthSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            paths: Paths::default(),
            default_weight: 1.0,
            model: ModelKind::Sage,
            sampler: SamplerStrategy::Top,
            features: FeatureStrategy::Topology,
            experiment: ExperimentConfig::default(),
            synth: SynthSettings::default(),
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("invalid value {raw:?} for {key}")))
}

fn flag(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key} must be true or false, not {raw:?}"))),
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut s = Settings::default();
        s.load(path)?;
        Ok(s)
    }

    /// Applies every `key = value` line of `path`.
    pub fn load(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected key = value"))?;
            self.set(key.trim(), raw.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::parse(path, i + 1, msg),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let exp = &mut self.experiment;
        let syn = &mut self.synth;
        match key {
            "graph" => self.paths.graph = Some(raw.into()),
            "trace" => self.paths.trace = Some(raw.into()),
            "activity" => self.paths.activity = Some(raw.into()),
            "pairs" => self.paths.pairs = Some(raw.into()),
            "out_dir" => self.paths.out_dir = raw.into(),
            "default_weight" => self.default_weight = value(key, raw)?,
            "seed" => exp.master_seed = value(key, raw)?,
            "task" => {
                exp.task = match raw {
                    "boundary" => Role::Boundary,
                    "core" => Role::Core,
                    _ => return Err(Error::Config(format!("task must be boundary or core, not {raw:?}"))),
                }
            }
            "model" => self.model = raw.parse()?,
            "sampler" => self.sampler = value(key, raw)?,
            "features" => self.features = value(key, raw)?,
            "involvement" => exp.tsm.involvement = value(key, raw)?,
            "tsm_max_iterations" => exp.tsm.max_iterations = value(key, raw)?,
            "tsm_epsilon" => exp.tsm.epsilon = value(key, raw)?,
            "tsm_initial_score" => exp.tsm.initial_score = value(key, raw)?,
            "resolution" => exp.resolution = value(key, raw)?,
            "neighbor_direction" => {
                exp.neighbor_direction = match raw {
                    "either" => NeighborDirection::Either,
                    "in" => NeighborDirection::In,
                    "out" => NeighborDirection::Out,
                    _ => {
                        return Err(Error::Config(format!(
                            "neighbor_direction must be either, in or out, not {raw:?}"
                        )))
                    }
                }
            }
            "sample_direction" => {
                exp.sample_direction = match raw {
                    "out" => SampleDirection::Out,
                    "in" => SampleDirection::In,
                    _ => {
                        return Err(Error::Config(format!(
                            "sample_direction must be out or in, not {raw:?}"
                        )))
                    }
                }
            }
            "depth" => exp.depth = value(key, raw)?,
            "sample_size" => exp.sample_size = value(key, raw)?,
            "learning_rate" => exp.learning_rate = value(key, raw)?,
            "epochs" => exp.epochs = value(key, raw)?,
            "batch_size" => exp.batch_size = value(key, raw)?,
            "hidden_dim" => exp.hidden_dim = value(key, raw)?,
            "resample_each_epoch" => exp.resample_each_epoch = flag(key, raw)?,
            "folds" => exp.folds = value(key, raw)?,
            "communities" => syn.communities = value(key, raw)?,
            "community_size" => syn.community_size = value(key, raw)?,
            "p_in" => syn.p_in = value(key, raw)?,
            "p_out" => syn.p_out = value(key, raw)?,
            "seeds_per_community" => syn.seeds_per_community = value(key, raw)?,
            "beta" => {
                syn.beta = if raw == "auto" {
                    Beta::Auto
                } else {
                    Beta::Fixed(value(key, raw)?)
                }
            }
            "target_low" => syn.target_low = value(key, raw)?,
            "target_high" => syn.target_high = value(key, raw)?,
            "timeline_size" => syn.timeline_size = value(key, raw)?,
            "trials" => syn.trials = value(key, raw)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override from the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {pair:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn model_spec(&self) -> ModelSpec {
        let features = self.features;
        let baseline = |baseline| ModelSpec::Baseline { baseline, features };
        match self.model {
            ModelKind::Sage => ModelSpec::Sage {
                sampler: self.sampler,
                features,
            },
            ModelKind::Trusting => baseline(BaselineKind::Trusting),
            ModelKind::Trusted => baseline(BaselineKind::Trusted),
            ModelKind::Interpolation => baseline(BaselineKind::Interpolation),
        }
    }

    /// Experiment configuration with the selected model filled in.
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            model: self.model_spec(),
            ..self.experiment.clone()
        }
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.paths.out_dir.join(name)
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(format!("no {key} path given (set `{key}` or pass --{key})")))
    }
}
