use thiserror::Error;

/// Errors raised by the model evaluation and the solvers.
#[derive(Debug, Error)]
pub enum TcrError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("division guard at pair ({n}, {m}): {what}")]
    DivisionGuard { n: usize, m: usize, what: &'static str },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// An error from a nested step, with where it happened.
    #[error("{context}: {source}")]
    Context { context: String, source: Box<TcrError> },
}

impl TcrError {
    pub fn context(self, context: impl Into<String>) -> Self {
        TcrError::Context { context: context.into(), source: Box::new(self) }
    }

    /// The innermost error under any context layers.
    pub fn root(&self) -> &TcrError {
        match self {
            TcrError::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by the input rather than by a solver.
    pub fn is_config_error(&self) -> bool {
        matches!(self.root(), TcrError::InvalidConfig(_) | TcrError::Io(_) | TcrError::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, TcrError>;
