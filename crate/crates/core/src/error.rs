use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The count law or time density assigns zero mass where a draw landed.
    #[error("invalid estimator choices: {0}")]
    InvalidChoices(String),
    /// The model produced a non-finite bound, weight or density.
    #[error("model error: {0}")]
    Model(String),
    /// A rejection loop exceeded its retry budget.
    #[error("rejection loop diverged after {retries} attempts")]
    Divergence { retries: u64 },
    /// An estimator could not be formed from the samples.
    #[error("estimation error: {0}")]
    Estimation(String),
    /// A numerical routine failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Invalid experiment configuration.
    #[error("config error{}: {message}", location(*.line, .field))]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
}

fn location(line: Option<usize>, field: &Option<String>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" at line {l} (field `{f}`)"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(f)) => format!(" (field `{f}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            field: Some(field.into()),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Domain(_) | Error::InvalidChoices(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
