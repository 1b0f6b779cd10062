use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// `z2^l` with fractional `l` has no value at `z2 = 0`.
    #[error("principal branch of z2^{l} is undefined at z2 = 0")]
    BranchUndefined { l: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid region spec: {0}")]
    InvalidSpec(String),

    #[error("symbolic iteration cap exceeded: requested {requested}, cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("exponent overflow in symbolic arithmetic")]
    ExponentOverflow,

    #[error("unsupported polynomial form: {0}")]
    UnsupportedForm(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("configuration error: {0}")]
    Config(String),
}
