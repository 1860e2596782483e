use std::path::PathBuf;

use crate::classifiers::TrainedModel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("sample {id}: {detail}")]
    Validation { id: String, detail: String },

    #[error("{0}")]
    InvalidInput(String),

    #[error("jaw point {point} coincides with the chin")]
    DegenerateLandmarks { point: usize },

    #[error("no color transition above row {start_row}")]
    NoHairlineFound { start_row: usize },

    #[error("non-finite objective value or gradient")]
    NumericalFailure,

    #[error("SMO did not converge for classes {a}/{b} within {iterations} iterations")]
    TrainingDidNotConverge {
        a: usize,
        b: usize,
        iterations: usize,
        model: Box<TrainedModel>,
    },

    #[error("{0}")]
    ModelFormat(String),

    #[error("could not draw a valid {class} sample after {retries} retries")]
    GenerationFailed { class: String, retries: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-greppable tag for this error kind.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::InvalidInput(_) => "invalid-input",
            Error::DegenerateLandmarks { .. } => "degenerate-landmarks",
            Error::NoHairlineFound { .. } => "no-hairline-found",
            Error::NumericalFailure => "numerical",
            Error::TrainingDidNotConverge { .. } => "did-not-converge",
            Error::ModelFormat(_) => "model-format",
            Error::GenerationFailed { .. } => "generation-failed",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidInput(detail.into())
    }
}
