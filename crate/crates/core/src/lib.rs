//! Age-of-information scheduling over a Markov mmWave channel paired with a
//! reliable sub-6GHz channel.
//!
//! Modules, bottom-up: [`model`] (parameters, states, kernel, regions),
//! [`closed_form`] (exact optimal average age), [`chain`] (stationary
//! analysis of any stationary policy), [`mdp`] (numerical dynamic
//! programming oracle), [`sim`] (Monte Carlo), [`cli`] (batch runs with CSV
//! output).

pub mod chain;
pub mod cli;
pub mod closed_form;
pub mod error;
pub mod mdp;
pub mod model;
pub mod policy;
pub mod sim;

pub use closed_form::{solve, solve_iid, Candidate, Family, SolveResult};
pub use error::{Error, Result};
pub use model::{
    classify_region, classify_region_discounted, transition, Action, ChannelParams, ChannelState,
    Region, RegionInfo, StateSpace, SystemState,
};
pub use policy::{Baseline, Direction, Policy, TabularPolicy, ThresholdPolicy, ThresholdSet};
