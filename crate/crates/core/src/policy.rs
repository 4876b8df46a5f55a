//! Stationary scheduling policies.

use std::fmt;

use crate::model::{Action, ChannelState, SystemState};

/// A stationary policy over the zero-wait action set.
///
/// A policy only decides at states with `l2 = 0`; while Channel 2 is busy
/// the action is always [`Action::Idle`]. Randomised policies are expressed
/// through the probability of picking Channel 1.
pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    /// Probability of choosing Channel 1 at a state with `l2 = 0`.
    fn ch1_probability(&self, state: &SystemState) -> f64;

    /// Resolve the action given a uniform draw in `[0, 1)`.
    fn action(&self, state: &SystemState, coin: f64) -> Action {
        if !state.is_idle() {
            Action::Idle
        } else if coin < self.ch1_probability(state) {
            Action::Ch1
        } else {
            Action::Ch2
        }
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Channel 1 below the threshold, Channel 2 at or above it.
    NonDecreasing,
    /// Channel 2 below the threshold, Channel 1 at or above it.
    NonIncreasing,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::NonDecreasing => "non-decreasing",
            Direction::NonIncreasing => "non-increasing",
        })
    }
}

impl Direction {
    pub fn action_at(self, delta: u64, threshold: u64) -> Action {
        match (self, delta < threshold) {
            (Direction::NonDecreasing, true) | (Direction::NonIncreasing, false) => Action::Ch1,
            _ => Action::Ch2,
        }
    }
}

/// An inclusive integer range of equivalent thresholds, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThresholdSet {
    pub lo: u64,
    pub hi: Option<u64>,
}

impl ThresholdSet {
    pub fn single(v: u64) -> Self {
        Self { lo: v, hi: Some(v) }
    }

    pub fn range(lo: u64, hi: u64) -> Self {
        Self { lo, hi: Some(hi) }
    }

    pub fn from(lo: u64) -> Self {
        Self { lo, hi: None }
    }

    pub fn contains(&self, v: u64) -> bool {
        v >= self.lo && self.hi.is_none_or(|hi| v <= hi)
    }

    pub fn smallest(&self) -> u64 {
        self.lo
    }
}

impl fmt::Display for ThresholdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(hi) if hi == self.lo => write!(f, "{{{}}}", self.lo),
            Some(hi) => write!(f, "{{{}..{}}}", self.lo, hi),
            None => write!(f, "{{{}..}}", self.lo),
        }
    }
}

/// Two thresholds on the age, one per previous Channel-1 state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdPolicy {
    pub dir0: Direction,
    pub lambda0: u64,
    pub dir1: Direction,
    pub lambda1: u64,
    /// Every `lambda1` inducing the same Markov chain as `lambda1`.
    pub lambda1_set: ThresholdSet,
}

impl ThresholdPolicy {
    pub fn always_ch1() -> Self {
        Self {
            dir0: Direction::NonIncreasing,
            lambda0: 1,
            dir1: Direction::NonIncreasing,
            lambda1: 1,
            lambda1_set: ThresholdSet::single(1),
        }
    }

    pub fn action_at(&self, delta: u64, l1: ChannelState) -> Action {
        match l1 {
            ChannelState::Off => self.dir0.action_at(delta, self.lambda0),
            ChannelState::On => self.dir1.action_at(delta, self.lambda1),
        }
    }
}

impl Policy for ThresholdPolicy {
    fn name(&self) -> String {
        "Age-optimal".to_string()
    }

    fn ch1_probability(&self, state: &SystemState) -> f64 {
        match self.action_at(state.delta, state.l1) {
            Action::Ch1 => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for ThresholdPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mu(.,0,0) {} at {}; mu(.,1,0) {} at {} (any of {})",
            self.dir0, self.lambda0, self.dir1, self.lambda1, self.lambda1_set
        )
    }
}

/// The comparison baselines: always Channel 1 ("mmWave"), always Channel 2
/// ("sub-6GHz") and a fair coin ("Random").
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    MmWave,
    Sub6,
    Random,
}

impl Policy for Baseline {
    fn name(&self) -> String {
        match self {
            Baseline::MmWave => "mmWave",
            Baseline::Sub6 => "sub-6GHz",
            Baseline::Random => "Random",
        }
        .to_string()
    }

    fn ch1_probability(&self, _state: &SystemState) -> f64 {
        match self {
            Baseline::MmWave => 1.0,
            Baseline::Sub6 => 0.0,
            Baseline::Random => 0.5,
        }
    }

    fn is_deterministic(&self) -> bool {
        !matches!(self, Baseline::Random)
    }
}

/// A policy given by an explicit action table over ages `1..=age_cap`.
/// Ages beyond the cap reuse the action at the cap.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    name: String,
    age_cap: u64,
    // [l1][delta - 1]
    table: [Vec<Action>; 2],
}

impl TabularPolicy {
    pub fn new(name: impl Into<String>, off: Vec<Action>, on: Vec<Action>) -> Self {
        assert_eq!(off.len(), on.len(), "both channel states need an entry per age");
        assert!(!off.is_empty());
        Self {
            name: name.into(),
            age_cap: off.len() as u64,
            table: [off, on],
        }
    }

    pub fn age_cap(&self) -> u64 {
        self.age_cap
    }

    pub fn action_at(&self, delta: u64, l1: ChannelState) -> Action {
        let i = (delta.clamp(1, self.age_cap) - 1) as usize;
        self.table[l1.index()][i]
    }
}

impl Policy for TabularPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ch1_probability(&self, state: &SystemState) -> f64 {
        match self.action_at(state.delta, state.l1) {
            Action::Ch1 => 1.0,
            _ => 0.0,
        }
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn name(&self) -> String {
        (**self).name()
    }

    fn ch1_probability(&self, state: &SystemState) -> f64 {
        (**self).ch1_probability(state)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn ch1_probability(&self, state: &SystemState) -> f64 {
        (**self).ch1_probability(state)
    }

    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}
