use std::path::PathBuf;

/// Errors raised by model construction, analysis and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates a type invariant. `field` is a dotted path.
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The 2x2 modal inertia matrix cannot be inverted.
    #[error("singular inertia matrix (det = {det:e})")]
    SingularInertia { det: f64 },

    /// No stability change inside the requested speed interval.
    #[error("flutter bracket [{v_lo}, {v_hi}] m/s invalid: {reason}")]
    Bracket { v_lo: f64, v_hi: f64, reason: String },

    /// Sinkhorn balancing of topology weights failed to converge.
    #[error("topology error: {0}")]
    Topology(String),

    /// The integrated state became non-finite.
    #[error("numerical divergence at step {step} (t = {t} s)")]
    Divergence { step: usize, t: f64 },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
