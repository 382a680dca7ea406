use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval [{start}, {end}): end must be greater than start and start non-negative")]
    InvalidInterval { start: f64, end: f64 },

    #[error("invalid segment: {0}")]
    InvalidSegment(String),

    #[error("invalid diarization for '{conversation}': {reason}")]
    InvalidDiarization { conversation: String, reason: String },

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("eigendecomposition did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("fixed speaker count {fixed} exceeds number of embeddings {n}")]
    TooManySpeakers { fixed: usize, n: usize },

    #[error("spectral basis unavailable for conversation '{0}': the spectral score needs a hypothesis produced by spectral clustering")]
    BasisUnavailable(String),

    #[error("conversation '{0}' has no scored speech")]
    Unscorable(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),

    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
