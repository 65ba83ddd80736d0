use thiserror::Error;

/// Errors raised by the model, the solvers and the brute-force oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed laminar tree at node `{node}`: {reason}")]
    Structure { node: String, reason: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("objective of node `{node}` is undefined at {arg}")]
    Domain { node: String, arg: i64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("undefined extended-integer operation: {0}")]
    Arithmetic(&'static str),

    #[error("instance too large for exhaustive search: {0}")]
    Scale(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
