use std::path::PathBuf;

/// Errors produced by the inference library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("type mismatch: {0}")]
    Type(String),

    #[error("unsupported operation: {0}")]
    Capability(String),

    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    #[error(
        "solver did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})"
    )]
    Convergence { iterations: usize, grad_norm: f64 },

    #[error("{path}:{line}: {message}")]
    Ingestion {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("posterior draw {index} failed: {source}")]
    Draw {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} posterior draws failed (limit 5%); first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },

    #[error("replication {replication}: {source}")]
    Replication {
        replication: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::Type(msg.into())
    }

    /// True when the failure is numerical (singular systems, nonconvergence),
    /// including numerical failures wrapped by draw or replication context.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RankDeficient(_) | Error::Convergence { .. } | Error::TooManyFailures { .. } => {
                true
            }
            Error::Draw { source, .. } | Error::Replication { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// True for malformed or inconsistent input data.
    pub fn is_data(&self) -> bool {
        match self {
            Error::Ingestion { .. } | Error::Io(_) | Error::Type(_) => true,
            Error::Draw { source, .. } | Error::Replication { source, .. } => source.is_data(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
