use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Group closure grew past the element cap, which usually means the
    /// generators have infinite order (e.g. a rotation by an irrational
    /// angle).
    #[error("group closure exceeded the cap of {cap} elements")]
    ClosureOverflow { cap: usize },

    #[error("sample count S = {s} is too small for F = {f} Fourier modes (need S >= 2F)")]
    Alias { s: usize, f: usize },

    /// Evaluation hit a (near-)collision: bodies `i` and `j` were closer
    /// than the collision tolerance at time sample `sample`.
    #[error("bodies {i} and {j} are closer than {tol:e} at time sample {sample}")]
    Collision {
        sample: usize,
        i: usize,
        j: usize,
        tol: f64,
    },

    #[error("validation failed:\n  - {}", issues.join("\n  - "))]
    Validation { issues: Vec<String> },

    #[error("schema mismatch in {context}: expected {expected}, found {actual}")]
    Schema {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("rendering supports d = 2 or d = 3, got d = {0}")]
    UnsupportedDimension(usize),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(issue: impl Into<String>) -> Self {
        Error::Validation {
            issues: vec![issue.into()],
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors a line search may retry past (collision rejections).
    pub fn is_collision(&self) -> bool {
        matches!(self, Error::Collision { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
