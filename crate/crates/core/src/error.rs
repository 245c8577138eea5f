use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The variants split into two families that the CLI maps onto exit codes:
/// contract/validation problems (bad input data or arguments) and
/// I/O/transport problems (files, network, remote service).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("diff parse error at line {line}: {message}")]
    DiffParse { line: usize, message: String },

    #[error("validation failed for {entity}: {rule}")]
    Validation { entity: String, rule: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("cannot impute feature {feature}: no observed values")]
    Imputation { feature: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("authentication rejected by forge (HTTP {status})")]
    Auth { status: u16 },

    #[error("rate limited by forge; retry after {retry_after_secs} s")]
    RateLimited { retry_after_secs: u64 },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// True for failures caused by the environment rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Transport(_) | Error::Auth { .. } | Error::RateLimited { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
