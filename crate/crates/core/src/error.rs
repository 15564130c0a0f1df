use thiserror::Error;

/// Errors raised by model construction, solving and verification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("`{name}` must be a probability in {range}, got {value}")]
    InvalidProbability {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("channel must be positively correlated: p01 = {p01} must be < p11 = {p11}")]
    NotPositivelyCorrelated { p01: f64, p11: f64 },

    #[error("stationary belief undefined for p01 = {p01}, p11 = {p11}")]
    NoStationaryBelief { p01: f64, p11: f64 },

    #[error("invalid instance field `{field}`: {reason}")]
    InvalidInstance { field: &'static str, reason: String },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("invalid belief vector: {0}")]
    InvalidBelief(String),

    #[error("invalid reward: {0}")]
    InvalidReward(String),

    #[error("invalid channel ordering: {0}")]
    InvalidOrdering(String),

    #[error("expansion budget exceeded: {bound} = {required:.3e} > {limit:.3e}")]
    BudgetExceeded {
        bound: &'static str,
        required: f64,
        limit: f64,
    },

    #[error("policy `{0}` is stochastic; estimate its value with the simulator")]
    StochasticPolicy(String),

    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
