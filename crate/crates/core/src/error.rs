use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("position {x1} m is outside the track [0, {length}] m")]
    OutOfTrack { x1: f64, length: f64 },

    #[error("infeasible slice: {0}")]
    InfeasibleSlice(String),

    #[error("invalid segment: {0}")]
    InvalidSegment(String),

    #[error("infeasible candidate: {0}")]
    InfeasibleCandidate(String),

    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("series may diverge: sup|dg/g| = {0} >= 1")]
    DivergenceRisk(f64),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("non-finite state: {0}")]
    NonFinite(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
