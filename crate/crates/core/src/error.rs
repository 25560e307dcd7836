use std::path::PathBuf;

use thiserror::Error;

use crate::policies::TabularPolicy;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate belief: all weights are zero")]
    DegenerateBelief,

    #[error("need at least 2 samples to fit a Gaussian, got {0}")]
    TooFewSamples(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("action {action} is outside the action set of size {size}")]
    InvalidAction { action: usize, size: usize },

    #[error("state index {0} is outside the state space")]
    UnknownState(usize),

    #[error("opponent models can only be mirrored for zero-sum games")]
    NotZeroSum,

    #[error("value iteration did not converge within {0} sweeps")]
    NonConvergence(usize),

    /// The learner hit its episode cap. The best greedy policy seen so far is
    /// carried along so callers can still use it.
    #[error("learning cap of {episodes} episodes reached (best window win rate {best_rate:.3})")]
    LearningCapReached {
        episodes: usize,
        best_rate: f64,
        best: Box<TabularPolicy>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing policy store at {}: run `bayes-tomop train --game {game} --seed <N>` first", path.display())]
    MissingStore { path: PathBuf, game: String },

    #[error("store error: {0}")]
    Store(String),

    #[error("malformed CSV {file} at row {row}: {msg}")]
    Csv { file: String, row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable name of the variant, for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateBelief => "degenerate-belief",
            Error::TooFewSamples(_) => "too-few-samples",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::InvalidAction { .. } => "invalid-action",
            Error::UnknownState(_) => "unknown-state",
            Error::NotZeroSum => "not-zero-sum",
            Error::NonConvergence(_) => "non-convergence",
            Error::LearningCapReached { .. } => "learning-cap",
            Error::Config(_) => "config",
            Error::MissingStore { .. } => "missing-store",
            Error::Store(_) => "store",
            Error::Csv { .. } => "csv",
            Error::Io(_) => "io",
        }
    }
}
