use thiserror::Error;

/// Errors raised by the simulator, compiler, and experiment driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index error: {0}")]
    Index(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("cannot lower gate {0} to the native gateset")]
    Lowering(String),

    #[error("gate {0} has no involutory generator; shift-rule derivatives unsupported")]
    UnsupportedGate(String),

    #[error("optimizer diverged at iteration {iteration}: {reason}")]
    Divergence {
        iteration: usize,
        reason: String,
        last_good: Vec<f64>,
    },

    #[error("no data: {0}")]
    NoData(String),

    #[error("no depth up to {l_max} passed the expressibility test")]
    Exhausted { l_max: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
