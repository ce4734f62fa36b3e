//! JSON run reports and model checkpoints.

use std::collections::BTreeMap;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use spreader_core::baselines::ThresholdModel;
use spreader_core::experiment::{ExperimentReport, SamplerStrategy};
use spreader_core::features::{FeatureStrategy, SampleDirection};
use spreader_core::sage::{SageParams, TrainConfig};
use spreader_core::sampler::SamplerConfig;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Start of the run, seconds since the Unix epoch.
    pub started_unix: u64,
    pub runtime_seconds: f64,
}

impl Timing {
    pub fn new(started: SystemTime, runtime: Duration) -> Self {
        Timing {
            started_unix: started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            runtime_seconds: runtime.as_secs_f64(),
        }
    }
}

/// Experiment report plus run timing and side files (paths relative to
/// the report's directory).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub experiment: ExperimentReport,
    pub artifacts: BTreeMap<String, String>,
    pub timing: Timing,
}

pub const CHECKPOINT_FORMAT: &str = "spreader-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub input: usize,
    pub hidden: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CheckpointModel {
    Sage {
        sampler: SamplerStrategy,
        sample_direction: SampleDirection,
        sampler_config: SamplerConfig,
        train_config: TrainConfig,
        dims: Dims,
        params: SageParams,
    },
    Baseline {
        model: ThresholdModel,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub features: FeatureStrategy,
    pub model: CheckpointModel,
}

impl Checkpoint {
    pub fn new(features: FeatureStrategy, model: CheckpointModel) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            features,
            model,
        }
    }

    /// Rejects files written by another tool or format version.
    pub fn check(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint is {} v{}, expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}",
                self.format, self.version
            )));
        }
        if let CheckpointModel::Sage { dims, params, .. } = &self.model {
            if params.input_dim() != dims.input || params.hidden_dim() != dims.hidden || params.depth() != dims.depth {
                return Err(Error::Config("checkpoint dims disagree with its parameters".into()));
            }
        }
        Ok(())
    }
}
