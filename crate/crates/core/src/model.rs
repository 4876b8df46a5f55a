//! Problem instance, state space, one-step kernel and region map.
//!
//! Channel 1 is a two-state Markov channel observed with one slot of
//! feedback delay; Channel 2 always delivers after `d` slots. The state is
//! `(delta, l1, l2)`: the current age, the Channel-1 state of the previous
//! slot and the remaining Channel-2 service time.

use std::fmt;

use crate::error::{Error, Result};

/// Default truncation of the age coordinate for numerical solvers.
pub const DEFAULT_AGE_CAP: u64 = 2000;

/// Half-width of the band in which a region label is flagged as fragile.
pub const NEAR_BOUNDARY: f64 = 1e-9;

/// The parameters `(p, q, d)` of the two channels.
///
/// `p` is the OFF self-transition probability and `q` the ON
/// self-transition probability of Channel 1; `d >= 2` is the Channel-2
/// service time in slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    p: f64,
    q: f64,
    d: u32,
}

impl ChannelParams {
    pub fn new(p: f64, q: f64, d: u32) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParams(format!("p = {p} must lie in (0, 1)")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParams(format!("q = {q} must lie in (0, 1)")));
        }
        if d < 2 {
            return Err(Error::InvalidParams(format!("d = {d} must be at least 2")));
        }
        Ok(Self { p, q, d })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Probability that Channel 1 is ON in a slot given its state in the
    /// previous slot.
    pub fn on_probability(&self, previous: ChannelState) -> f64 {
        match previous {
            ChannelState::On => self.q,
            ChannelState::Off => 1.0 - self.p,
        }
    }

    /// Long-run fraction of slots in which Channel 1 is ON.
    pub fn stationary_on(&self) -> f64 {
        (1.0 - self.p) / (2.0 - self.p - self.q)
    }

    /// Whether Channel 1 is i.i.d. over time (`p + q = 1`).
    pub fn is_iid(&self) -> bool {
        (self.p + self.q - 1.0).abs() < 1e-12
    }

    /// `1 - d(1 - p)`: positive exactly when the threshold families apply.
    pub fn drift(&self) -> f64 {
        1.0 - f64::from(self.d) * (1.0 - self.p)
    }

    pub fn matrix_powers(&self, k: u32) -> MatrixPowers {
        matrix_powers(self, k)
    }
}

impl fmt::Display for ChannelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, q={}, d={})", self.p, self.q, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelState {
    Off = 0,
    On = 1,
}

impl ChannelState {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            ChannelState::Off
        } else {
            ChannelState::On
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    pub delta: u64,
    pub l1: ChannelState,
    pub l2: u32,
}

impl SystemState {
    pub fn new(delta: u64, l1: ChannelState, l2: u32) -> Self {
        Self { delta, l1, l2 }
    }

    /// Both channels are free and a scheduling decision is due.
    pub fn is_idle(&self) -> bool {
        self.l2 == 0
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.delta, self.l1.index(), self.l2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Ch1,
    Ch2,
    Idle,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Ch1, Action::Ch2, Action::Idle];

    pub fn index(self) -> usize {
        match self {
            Action::Ch1 => 0,
            Action::Ch2 => 1,
            Action::Idle => 2,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Ch1 => "1",
            Action::Ch2 => "2",
            Action::Idle => "none",
        })
    }
}

/// Which actions are admissible at `l2 = 0`.
///
/// `Restricted` is the zero-wait class used by every solver. `Unrestricted`
/// additionally allows idling while both channels are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionSet {
    #[default]
    Restricted,
    Unrestricted,
}

impl ActionSet {
    pub fn admits(self, state: &SystemState, action: Action) -> bool {
        match (state.l2, action) {
            (0, Action::Ch1 | Action::Ch2) => true,
            (0, Action::Idle) => self == ActionSet::Unrestricted,
            (_, Action::Idle) => true,
            _ => false,
        }
    }

    pub fn actions(self, state: &SystemState) -> &'static [Action] {
        match (state.l2, self) {
            (0, ActionSet::Restricted) => &[Action::Ch1, Action::Ch2],
            (0, ActionSet::Unrestricted) => &Action::ALL,
            _ => &[Action::Idle],
        }
    }
}

/// Truncated state space `{1..=age_cap} x {0,1} x {0..d-1}`, indexed
/// age-major, then `l1`, then `l2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    d: u32,
    age_cap: u64,
}

impl StateSpace {
    pub fn new(d: u32, age_cap: u64) -> Result<Self> {
        let required = u64::from(d) + 1;
        if age_cap < required {
            return Err(Error::CapTooSmall { age_cap, required });
        }
        Ok(Self { d, age_cap })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn age_cap(&self) -> u64 {
        self.age_cap
    }

    pub fn len(&self) -> usize {
        self.age_cap as usize * 2 * self.d as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: &SystemState) -> bool {
        s.delta >= 1 && s.delta <= self.age_cap && s.l2 < self.d
    }

    pub fn index(&self, s: &SystemState) -> usize {
        debug_assert!(self.contains(s));
        let d = self.d as usize;
        ((s.delta as usize - 1) * 2 + s.l1.index()) * d + s.l2 as usize
    }

    pub fn state(&self, index: usize) -> SystemState {
        let d = self.d as usize;
        let l2 = (index % d) as u32;
        let rest = index / d;
        let l1 = ChannelState::from_bit((rest % 2) as u8);
        let delta = (rest / 2) as u64 + 1;
        SystemState { delta, l1, l2 }
    }

    pub fn states(&self) -> impl Iterator<Item = SystemState> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }
}

/// The two outcomes of one slot, ON branch first.
pub type Transition = [(SystemState, f64); 2];

/// One-step kernel under the zero-wait action set.
pub fn transition(
    s: &SystemState,
    u: Action,
    params: &ChannelParams,
    age_cap: u64,
) -> Result<Transition> {
    transition_with(s, u, params, age_cap, ActionSet::Restricted)
}

pub fn transition_with(
    s: &SystemState,
    u: Action,
    params: &ChannelParams,
    age_cap: u64,
    action_set: ActionSet,
) -> Result<Transition> {
    let d = params.d();
    if s.delta == 0 || s.delta > age_cap || s.l2 >= d || age_cap <= u64::from(d) {
        return Err(Error::StateOutOfBounds {
            state: *s,
            d,
            age_cap,
        });
    }
    if !action_set.admits(s, u) {
        return Err(Error::InadmissibleAction {
            state: *s,
            action: u,
        });
    }
    Ok(kernel(s, u, params, age_cap))
}

/// Unchecked kernel used in the inner loops of the solvers.
#[inline]
pub(crate) fn kernel(s: &SystemState, u: Action, params: &ChannelParams, age_cap: u64) -> Transition {
    let on = params.on_probability(s.l1);
    let off = 1.0 - on;
    let older = (s.delta + 1).min(age_cap);
    let d = params.d();
    let (on_state, off_state) = match (u, s.l2) {
        (Action::Ch1, _) => (
            SystemState::new(1, ChannelState::On, 0),
            SystemState::new(older, ChannelState::Off, 0),
        ),
        (Action::Ch2, _) => (
            SystemState::new(older, ChannelState::On, d - 1),
            SystemState::new(older, ChannelState::Off, d - 1),
        ),
        (Action::Idle, 0) => (
            SystemState::new(older, ChannelState::On, 0),
            SystemState::new(older, ChannelState::Off, 0),
        ),
        (Action::Idle, 1) => (
            SystemState::new(u64::from(d), ChannelState::On, 0),
            SystemState::new(u64::from(d), ChannelState::Off, 0),
        ),
        (Action::Idle, l2) => (
            SystemState::new(older, ChannelState::On, l2 - 1),
            SystemState::new(older, ChannelState::Off, l2 - 1),
        ),
    };
    [(on_state, on), (off_state, off)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    B1,
    B2,
    B3,
    B4,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::B1 => "B1",
            Region::B2 => "B2",
            Region::B3 => "B3",
            Region::B4 => "B4",
        })
    }
}

/// Region label together with the three sign functions that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionInfo {
    pub region: Region,
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl RegionInfo {
    fn from_signs(f: f64, g: f64, h: f64) -> Self {
        let region = if f <= 0.0 {
            if h <= 0.0 {
                Region::B1
            } else {
                Region::B4
            }
        } else if g <= 0.0 {
            Region::B2
        } else {
            Region::B3
        };
        Self { region, f, g, h }
    }

    /// True when the sign function that decided the label is within
    /// [`NEAR_BOUNDARY`] of zero.
    pub fn near_boundary(&self) -> bool {
        let deciding = match self.region {
            Region::B1 | Region::B4 => self.h,
            Region::B2 | Region::B3 => self.g,
        };
        self.f.abs() < NEAR_BOUNDARY || deciding.abs() < NEAR_BOUNDARY
    }

    /// Smallest magnitude among the sign functions relevant to the label.
    pub fn margin(&self) -> f64 {
        let deciding = match self.region {
            Region::B1 | Region::B4 => self.h,
            Region::B2 | Region::B3 => self.g,
        };
        self.f.abs().min(deciding.abs())
    }
}

pub fn classify_region(params: &ChannelParams) -> RegionInfo {
    let (p, q, d) = (params.p, params.q, f64::from(params.d));
    let f = 1.0 / (1.0 - p) - d;
    let g = 1.0 - d * q;
    let h = (1.0 - q) / (1.0 - p) - d + 1.0;
    RegionInfo::from_signs(f, g, h)
}

/// `sum_{i=0}^{n-1} alpha^i` in closed form, stable as `alpha -> 1`.
pub(crate) fn geometric_sum(alpha: f64, n: u32) -> f64 {
    -(f64::from(n) * alpha.ln()).exp_m1() / (1.0 - alpha)
}

pub fn classify_region_discounted(params: &ChannelParams, alpha: f64) -> Result<RegionInfo> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidDiscount(alpha));
    }
    let (p, q) = (params.p, params.q);
    let m = geometric_sum(alpha, params.d);
    let tail = 1.0 / (1.0 - alpha * p);
    let f = tail - m;
    let g = 1.0 + alpha * (1.0 - q) * m - m;
    let h = 1.0 + alpha * (1.0 - q) * tail - m;
    Ok(RegionInfo::from_signs(f, g, h))
}

/// Rows of `P^k` for `P = [[q, 1-q], [1-p, p]]` (state order ON, OFF).
///
/// `(a, b)` is the row started from OFF, `(a_on, b_on)` the row started
/// from ON; `a` entries are the probability of ending ON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixPowers {
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub a_on: f64,
    pub b_on: f64,
}

pub fn matrix_powers(params: &ChannelParams, k: u32) -> MatrixPowers {
    let (p, q) = (params.p, params.q);
    // row vectors [ON, OFF] pushed through P one step at a time
    let step = |on: f64, off: f64| (on * q + off * (1.0 - p), on * (1.0 - q) + off * p);
    let (mut a, mut b) = (0.0, 1.0);
    let (mut a_on, mut b_on) = (1.0, 0.0);
    for _ in 0..k {
        (a, b) = step(a, b);
        (a_on, b_on) = step(a_on, b_on);
    }
    MatrixPowers { k, a, b, a_on, b_on }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, q: f64, d: u32) -> ChannelParams {
        ChannelParams::new(p, q, d).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ChannelParams::new(0.0, 0.5, 3).is_err());
        assert!(ChannelParams::new(0.5, 1.0, 3).is_err());
        assert!(ChannelParams::new(0.5, 0.5, 1).is_err());
        assert!(ChannelParams::new(f64::NAN, 0.5, 3).is_err());
    }

    #[test]
    fn ch1_from_off_state() {
        let pr = params(0.4, 0.7, 5);
        let s = SystemState::new(5, ChannelState::Off, 0);
        let [(on, p_on), (off, p_off)] = transition(&s, Action::Ch1, &pr, 100).unwrap();
        assert_eq!(on, SystemState::new(1, ChannelState::On, 0));
        assert!((p_on - 0.6).abs() < 1e-15);
        assert_eq!(off, SystemState::new(6, ChannelState::Off, 0));
        assert!((p_off - 0.4).abs() < 1e-15);
    }

    #[test]
    fn delivery_on_channel_two_resets_age_to_d() {
        let pr = params(0.3, 0.8, 7);
        for l1 in [ChannelState::Off, ChannelState::On] {
            let s = SystemState::new(5, l1, 1);
            let out = transition(&s, Action::Idle, &pr, 100).unwrap();
            assert_eq!(out[0].0, SystemState::new(7, ChannelState::On, 0));
            assert_eq!(out[1].0, SystemState::new(7, ChannelState::Off, 0));
            assert!((out[0].1 - pr.on_probability(l1)).abs() < 1e-15);
        }
    }

    #[test]
    fn admissibility() {
        let pr = params(0.3, 0.8, 4);
        let free = SystemState::new(3, ChannelState::On, 0);
        let busy = SystemState::new(3, ChannelState::On, 2);
        assert!(matches!(
            transition(&free, Action::Idle, &pr, 50),
            Err(Error::InadmissibleAction { .. })
        ));
        assert!(transition_with(&free, Action::Idle, &pr, 50, ActionSet::Unrestricted).is_ok());
        assert!(transition(&busy, Action::Ch1, &pr, 50).is_err());
        assert!(transition(&busy, Action::Ch2, &pr, 50).is_err());
        let outside = SystemState::new(3, ChannelState::On, 4);
        assert!(matches!(
            transition(&outside, Action::Idle, &pr, 50),
            Err(Error::StateOutOfBounds { .. })
        ));
        let too_old = SystemState::new(51, ChannelState::On, 0);
        assert!(transition(&too_old, Action::Ch1, &pr, 50).is_err());
    }

    #[test]
    fn age_clamps_at_cap() {
        let pr = params(0.3, 0.8, 4);
        let s = SystemState::new(50, ChannelState::Off, 0);
        let out = transition(&s, Action::Ch1, &pr, 50).unwrap();
        assert_eq!(out[1].0.delta, 50);
    }

    #[test]
    fn exhaustive_normalization_and_channel_marginal() {
        for d in 2..=6 {
            let pr = params(0.35, 0.55, d);
            let cap = 50;
            let space = StateSpace::new(d, cap).unwrap();
            for s in space.states() {
                for &u in ActionSet::Unrestricted.actions(&s) {
                    let out = transition_with(&s, u, &pr, cap, ActionSet::Unrestricted).unwrap();
                    let total: f64 = out.iter().map(|(_, w)| w).sum();
                    assert!((total - 1.0).abs() < 1e-15);
                    // ON mass must be the P row of l1 regardless of action
                    let on_mass: f64 = out
                        .iter()
                        .filter(|(t, _)| t.l1 == ChannelState::On)
                        .map(|(_, w)| w)
                        .sum();
                    assert!((on_mass - pr.on_probability(s.l1)).abs() < 1e-15);
                    assert!(out.iter().all(|(t, _)| space.contains(t)));
                }
            }
        }
    }

    #[test]
    fn state_space_indexing_roundtrip() {
        let space = StateSpace::new(3, 20).unwrap();
        for (i, s) in space.states().enumerate() {
            assert_eq!(space.index(&s), i);
        }
        assert_eq!(space.len(), 120);
        assert!(StateSpace::new(5, 5).is_err());
    }

    #[test]
    fn region_examples() {
        let info = classify_region(&params(0.5, 0.5, 10));
        assert_eq!(info.region, Region::B1);
        assert_eq!((info.f, info.g, info.h), (-8.0, -4.0, -8.0));

        let info = classify_region(&params(0.95, 0.05, 10));
        assert_eq!(info.region, Region::B3);
        assert!((info.f - 10.0).abs() < 1e-9);
        assert!((info.g - 0.5).abs() < 1e-12);
    }

    #[test]
    fn region_ties_follow_the_closed_side() {
        // F = 1/(1-0.5) - 2 = 0 exactly, H = 0.5/0.5 - 1 = 0 exactly
        let info = classify_region(&params(0.5, 0.5, 2));
        assert_eq!(info.f, 0.0);
        assert_eq!(info.h, 0.0);
        assert_eq!(info.region, Region::B1);
        assert!(info.near_boundary());
        // G = 1 - 2 * 0.5 = 0 with F > 0
        let info = classify_region(&params(0.75, 0.5, 2));
        assert_eq!(info.g, 0.0);
        assert_eq!(info.region, Region::B2);
    }

    #[test]
    fn discounted_region_examples() {
        let info = classify_region_discounted(&params(0.5, 0.5, 10), 0.99).unwrap();
        assert_eq!(info.region, Region::B1);
        let info = classify_region_discounted(&params(0.5, 0.3, 2), 0.5).unwrap();
        assert!((info.f - (4.0 / 3.0 - 1.5)).abs() < 1e-15);
        assert!(classify_region_discounted(&params(0.5, 0.3, 2), 1.0).is_err());
        assert!(classify_region_discounted(&params(0.5, 0.3, 2), 0.0).is_err());
    }

    #[test]
    fn geometric_sum_matches_loop() {
        for &alpha in &[0.3_f64, 0.9, 0.999, 0.99999] {
            for n in 1..30 {
                let direct: f64 = (0..n).map(|i| alpha.powi(i as i32)).sum();
                assert!((geometric_sum(alpha, n) - direct).abs() < 1e-11 * direct);
            }
        }
    }

    #[test]
    fn matrix_power_rows() {
        let pr = params(0.3, 0.8, 4);
        let m0 = pr.matrix_powers(0);
        assert_eq!((m0.a, m0.b, m0.a_on, m0.b_on), (0.0, 1.0, 1.0, 0.0));
        let m1 = pr.matrix_powers(1);
        assert!((m1.a - 0.7).abs() < 1e-15 && (m1.b - 0.3).abs() < 1e-15);
        assert!((m1.a_on - 0.8).abs() < 1e-15 && (m1.b_on - 0.2).abs() < 1e-15);
        for k in 0..=64 {
            let m = pr.matrix_powers(k);
            assert!((m.a + m.b - 1.0).abs() < 1e-12);
            assert!((m.a_on + m.b_on - 1.0).abs() < 1e-12);
            for v in [m.a, m.b, m.a_on, m.b_on] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        // both rows converge to the stationary law
        let far = pr.matrix_powers(200);
        assert!((far.a - pr.stationary_on()).abs() < 1e-12);
        assert!((far.a_on - pr.stationary_on()).abs() < 1e-12);
    }
}
