use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// The explicit scheme would be unstable for this mesh.
    #[error("CFL condition violated for the {phase} phase: margin {margin:.6} > 1")]
    Stability { phase: &'static str, margin: f64 },

    #[error("no stable mesh exists: {0}")]
    Infeasible(String),

    #[error("the piecewise proliferation profile is defined for 96 sections only, got {0}")]
    UnsupportedProfile(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
