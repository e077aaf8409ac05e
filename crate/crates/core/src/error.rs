use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("feature `{0}` is missing in every record")]
    UnusableFeature(&'static str),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("capacity exceeded: requested {requested} windows but only {available} available")]
    Capacity { requested: usize, available: usize },

    #[error("invalid state: {0}")]
    State(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("infinite latency: {0}")]
    InfiniteLatency(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations: {message}")]
    Solver { iterations: usize, message: String, last_iterate: Vec<f64> },

    #[error("search space too large: {evaluations} evaluations exceeds budget {budget}")]
    SearchSize { evaluations: u128, budget: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
