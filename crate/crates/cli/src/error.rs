use sgcl_core::SgclError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("divergence: {0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 4,
            Self::Divergence(_) => 5,
        }
    }
}

impl From<SgclError> for CliError {
    fn from(e: SgclError) -> Self {
        let msg = e.to_string();
        match e {
            SgclError::Parse { .. }
            | SgclError::Range { .. }
            | SgclError::Consistency(_)
            | SgclError::Config(_)
            | SgclError::Usage(_) => Self::Config(msg),
            SgclError::Shape { .. }
            | SgclError::Numeric(_)
            | SgclError::NonFiniteLoss { .. }
            | SgclError::EmptyStatistics
            | SgclError::DegenerateProbe(_) => Self::Numeric(msg),
            SgclError::Divergence { .. } => Self::Divergence(msg),
            SgclError::Corrupt { .. } | SgclError::Io(_) | SgclError::Json(_) => Self::Io(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
