use thiserror::Error;

pub type Result<T> = std::result::Result<T, SgclError>;

#[derive(Debug, Error)]
pub enum SgclError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("index {index} out of range (limit {limit}) at line {line}")]
    Range {
        index: usize,
        limit: usize,
        line: usize,
    },

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite values in {0}")]
    Numeric(String),

    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("invalid usage: {0}")]
    Usage(String),

    #[error("all rows are degenerate; statistics are empty")]
    EmptyStatistics,

    #[error("training split contains a single class ({0})")]
    DegenerateProbe(usize),

    #[error("dynamics diverged at step {step} with learning rate {learning_rate}: {reason}")]
    Divergence {
        step: usize,
        learning_rate: f64,
        reason: String,
    },

    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SgclError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        SgclError::Shape {
            op,
            detail: detail.into(),
        }
    }
}
