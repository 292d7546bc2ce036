use std::path::PathBuf;

/// Errors raised by tree construction, inference, evaluation and tuning.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A structural invariant does not hold. `node` names the offending node when known.
    #[error("validation failed{}: {message}", .node.map(|n| format!(" at node {n}")).unwrap_or_default())]
    Validation { node: Option<usize>, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical evaluation failed: {0}")]
    Evaluation(String),

    #[error("resource limit exceeded: {needed} exceeds cap of {limit}")]
    ResourceLimit { limit: u64, needed: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }

    pub(crate) fn at_node(node: usize, msg: impl Into<String>) -> Self {
        Self::Validation {
            node: Some(node),
            message: msg.into(),
        }
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Self::Validation {
            node: None,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
