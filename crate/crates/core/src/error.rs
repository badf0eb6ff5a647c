use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::ModelKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid trajectory set: point {point}: {msg}")]
    InvalidPoint { point: usize, msg: String },

    #[error("invalid trajectory set: {0}")]
    InvalidTrajectories(String),

    #[error("pruning with min_frames={min_frames} leaves no points")]
    EmptyAfterPrune { min_frames: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("could not produce {budget} valid {kind} hypotheses in {attempts} attempts")]
    HypothesisExhaustion {
        kind: ModelKind,
        budget: usize,
        attempts: usize,
    },

    #[error("point {point} has no non-missing residual")]
    NoResiduals { point: usize },

    #[error("points {i} and {j} share affinity {value} but are never co-visible")]
    CovisibilityMismatch { i: usize, j: usize, value: f64 },

    #[error("point {point} has zero degree")]
    ZeroDegree { point: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("label vectors differ in length: {pred} vs {truth}")]
    SizeMismatch { pred: usize, truth: usize },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("unknown archetype `{0}`")]
    UnknownArchetype(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse category used for CLI exit messages.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. }
            | Error::InvalidPoint { .. }
            | Error::InvalidTrajectories(_)
            | Error::EmptyAfterPrune { .. }
            | Error::SizeMismatch { .. }
            | Error::InvalidScene(_) => "input",
            Error::UnknownArchetype(_) | Error::Config(_) => "config",
            Error::DegenerateSample(_)
            | Error::Numerical(_)
            | Error::HypothesisExhaustion { .. }
            | Error::NoResiduals { .. }
            | Error::CovisibilityMismatch { .. }
            | Error::ZeroDegree { .. }
            | Error::Eigen(_) => "numerical",
        }
    }
}
