use thiserror::Error;

use crate::model::{Action, SystemState};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),

    #[error("action {action} is not admissible at state {state}")]
    InadmissibleAction { state: SystemState, action: Action },

    #[error("state {state} lies outside the state space (d = {d}, age cap = {age_cap})")]
    StateOutOfBounds {
        state: SystemState,
        d: u32,
        age_cap: u64,
    },

    #[error("discount factor must lie in (0, 1), got {0}")]
    InvalidDiscount(f64),

    #[error("threshold family {family} needs 1 - p < 1/d (regions B2 or B3)")]
    OutsideThresholdRegion { family: u8 },

    #[error("s = {s} is outside the domain of threshold family {family}")]
    OutsideDomain { family: u8, s: u64 },

    #[error("bisection bracket [0, {upper}] has no sign change for family {family}")]
    BracketFailure { family: u8, upper: f64 },

    #[error("finite-difference identity violated for family {family} at s = {s} (deviation {deviation:e})")]
    IdentityViolated { family: u8, s: u64, deviation: f64 },

    #[error("{solver} did not converge within {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: u64,
        residual: f64,
    },

    #[error("policy-induced chain has {0} recurrent classes, expected exactly one")]
    RecurrentClasses(usize),

    #[error("stationary system is numerically singular")]
    SingularSystem,

    #[error("age cap {age_cap} too small, need at least {required}")]
    CapTooSmall { age_cap: u64, required: u64 },

    #[error("channel is not i.i.d.: p + q - 1 = {0:e}")]
    NotIid(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
