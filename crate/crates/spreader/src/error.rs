use std::path::PathBuf;

use spreader_core::baselines::BaselineError;
use spreader_core::community::CommunityError;
use spreader_core::eval::EvalError;
use spreader_core::experiment::ExperimentError;
use spreader_core::features::FeatureError;
use spreader_core::sage::ModelError;
use spreader_core::sampler::SamplerError;
use spreader_core::synth::SynthError;
use spreader_core::tsm::TrustError;
use spreader_core::GraphError;

/// Process exit code for malformed or inconsistent input.
pub const EXIT_INPUT: i32 = 2;
/// Process exit code when well-formed input violates a module contract.
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("unknown node {label:?} in {}", path.display())]
    UnknownNode { path: PathBuf, label: String },
    #[error("{0}")]
    Refused(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("[tsm] {0}")]
    Trust(#[from] TrustError),
    #[error("[communities] {0}")]
    Community(#[from] CommunityError),
    #[error("[featurize] {0}")]
    Feature(#[from] FeatureError),
    #[error("[sample] {0}")]
    Sampler(#[from] SamplerError),
    #[error("[synth] {0}")]
    Synth(#[from] SynthError),
    #[error("[evaluate] {0}")]
    Eval(#[from] EvalError),
    #[error("[train] {0}")]
    Model(#[from] ModelError),
    #[error("[baseline] {0}")]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Contract refusals (single-class data, too few examples) exit with
    /// [`EXIT_REFUSED`]; everything else is an input error.
    pub fn exit_code(&self) -> i32 {
        let refused = match self {
            Error::Refused(_) => true,
            Error::Experiment(e) => e.is_contract_refusal(),
            Error::Model(ModelError::InsufficientClass { .. }) => true,
            Error::Baseline(BaselineError::InsufficientClass { .. }) => true,
            Error::Eval(EvalError::TooFewExamples { .. } | EvalError::SingleClassFold { .. }) => true,
            _ => false,
        };
        if refused {
            EXIT_REFUSED
        } else {
            EXIT_INPUT
        }
    }
}
