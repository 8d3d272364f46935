use thiserror::Error;

/// Errors reported by distribution construction, rule validation, the ruin
/// solvers, and the simulation oracles.
#[derive(Debug, Error)]
pub enum Error {
    /// A joint claim distribution failed validation at construction.
    #[error("invalid claim distribution: {0}")]
    Distribution(String),

    /// A premium scale or transition rule set failed validation.
    #[error("invalid bonus-malus specification: {0}")]
    Rules(String),

    /// A query mixed incompatible components or carried an out-of-range
    /// parameter.
    #[error("invalid query: {0}")]
    Query(String),

    /// A function argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested Markov analysis is undefined for the given premium
    /// rule.
    #[error("transition matrix undefined: {0}")]
    NotHomogeneous(String),

    /// The level chain has no unique stationary distribution.
    #[error("stationary distribution: {0}")]
    Markov(String),

    /// An exhaustive computation would exceed its configured budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// A configuration file could not be parsed or validated.
    #[error("configuration: {0}")]
    Config(String),

    /// An internal invariant was violated; indicates a bug, not bad input.
    #[error("internal logic error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
