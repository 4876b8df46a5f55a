//! Dynamic-programming oracle on the age-truncated state space.
//!
//! Discounted value iteration and relative value iteration for arbitrary
//! nondecreasing age costs, plus executable checks of the structural
//! results: threshold monotonicity of greedy policies, the Q-difference
//! identities behind supermodularity, and the zero-wait restriction.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::model::{
    classify_region, classify_region_discounted, geometric_sum, kernel, Action, ActionSet, ChannelParams,
    ChannelState, Region, StateSpace, SystemState, DEFAULT_AGE_CAP,
};
use crate::policy::{Direction, Policy, TabularPolicy};

/// Costs are clipped here to keep value iterates finite.
pub const COST_CLIP: f64 = 1e300;

/// Aperiodicity transform weight for relative value iteration.
const LAZY: f64 = 0.5;

/// Fraction of the age range excluded from structural checks.
const CAP_ZONE: f64 = 0.05;

/// Rounding allowance per state, in units of `EPSILON * |T h|`.
const ROUNDING_SLACK: f64 = 64.0;

const NONE: u32 = u32::MAX;

/// Per-slot cost as a function of the age.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostFunction {
    Linear,
    /// `eta^delta`.
    Exponential { eta: f64 },
}

impl CostFunction {
    pub fn eval(&self, delta: u64) -> f64 {
        match *self {
            CostFunction::Linear => delta as f64,
            CostFunction::Exponential { eta } => (delta as f64 * eta.ln()).exp().min(COST_CLIP),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, CostFunction::Linear)
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::Linear => f.write_str("linear"),
            CostFunction::Exponential { eta } => write!(f, "exp:{eta}"),
        }
    }
}

impl FromStr for CostFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "linear" {
            return Ok(CostFunction::Linear);
        }
        let eta = s
            .strip_prefix("exp:")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown cost function '{s}'")))?;
        if !(eta >= 1.0 && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "exponential cost needs a finite base >= 1, got {eta}"
            )));
        }
        Ok(CostFunction::Exponential { eta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Discounted(f64),
    Average,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub age_cap: u64,
    pub tol: f64,
    pub max_iterations: u64,
    pub action_set: ActionSet,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            age_cap: DEFAULT_AGE_CAP,
            tol: 1e-9,
            max_iterations: 1_000_000,
            action_set: ActionSet::Restricted,
        }
    }
}

impl OracleOptions {
    pub fn with_cap(age_cap: u64) -> Self {
        Self {
            age_cap,
            ..Self::default()
        }
    }
}

/// Successor indices per action, precomputed once per solve.
struct Tables {
    space: StateSpace,
    cost: Vec<f64>,
    p_on: Vec<f64>,
    // [state][action] -> (on successor, off successor); NONE if inadmissible
    succ: Vec<[(u32, u32); 3]>,
}

impl Tables {
    fn new(params: &ChannelParams, cost: &CostFunction, opts: &OracleOptions) -> Result<Self> {
        let required = 20 * u64::from(params.d());
        if opts.age_cap < required {
            return Err(Error::CapTooSmall {
                age_cap: opts.age_cap,
                required,
            });
        }
        if opts.tol.is_nan() || opts.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", opts.tol)));
        }
        let space = StateSpace::new(params.d(), opts.age_cap)?;
        let n = space.len();
        let mut tables = Self {
            cost: Vec::with_capacity(n),
            p_on: Vec::with_capacity(n),
            succ: Vec::with_capacity(n),
            space,
        };
        let mut clipped = false;
        for i in 0..n {
            let s = tables.space.state(i);
            let c = cost.eval(s.delta);
            clipped |= c >= COST_CLIP;
            tables.cost.push(c);
            tables.p_on.push(params.on_probability(s.l1));
            let mut row = [(NONE, NONE); 3];
            for &u in opts.action_set.actions(&s) {
                let [(on, _), (off, _)] = kernel(&s, u, params, opts.age_cap);
                row[u.index()] = (tables.space.index(&on) as u32, tables.space.index(&off) as u32);
            }
            tables.succ.push(row);
        }
        if clipped {
            warn!("cost {cost} clipped at {COST_CLIP:e} below age cap {}", opts.age_cap);
        }
        Ok(tables)
    }

    #[inline]
    fn expect(&self, i: usize, u: usize, v: &[f64]) -> Option<f64> {
        let (on, off) = self.succ[i][u];
        if on == NONE {
            return None;
        }
        let w = self.p_on[i];
        Some(w * v[on as usize] + (1.0 - w) * v[off as usize])
    }

    /// `min_u Q(i, u)` over admissible actions.
    #[inline]
    fn best(&self, i: usize, v: &[f64], weight: f64) -> f64 {
        let mut best = f64::INFINITY;
        for u in 0..3 {
            if let Some(e) = self.expect(i, u, v) {
                best = best.min(self.cost[i] + weight * e);
            }
        }
        best
    }

    fn q_table(&self, v: &[f64], weight: f64, offset: f64) -> Vec<[f64; 3]> {
        (0..self.space.len())
            .map(|i| {
                let mut row = [f64::INFINITY; 3];
                for (u, slot) in row.iter_mut().enumerate() {
                    if let Some(e) = self.expect(i, u, v) {
                        *slot = self.cost[i] - offset + weight * e;
                    }
                }
                row
            })
            .collect()
    }
}

fn greedy(q: &[[f64; 3]]) -> Vec<Action> {
    q.iter()
        .map(|row| {
            let mut best = 0;
            for u in 1..3 {
                if row[u] < row[best] {
                    best = u;
                }
            }
            Action::ALL[best]
        })
        .collect()
}

/// Converged value function, Q-table and greedy policy.
#[derive(Debug, Clone)]
pub struct ValueSolution {
    pub criterion: Criterion,
    pub params: ChannelParams,
    pub cost: CostFunction,
    pub space: StateSpace,
    pub action_set: ActionSet,
    /// Value (discounted) or bias anchored at `(1,1,0)` (average cost).
    pub j: Vec<f64>,
    /// Indexed by state then action; inadmissible actions hold infinity.
    pub q: Vec<[f64; 3]>,
    pub policy: Vec<Action>,
    pub gain: Option<f64>,
    pub iterations: u64,
    pub residual: f64,
}

impl ValueSolution {
    pub fn value(&self, s: &SystemState) -> f64 {
        self.j[self.space.index(s)]
    }

    pub fn q_value(&self, s: &SystemState, u: Action) -> f64 {
        self.q[self.space.index(s)][u.index()]
    }

    pub fn action(&self, s: &SystemState) -> Action {
        self.policy[self.space.index(s)]
    }

    pub fn age_cap(&self) -> u64 {
        self.space.age_cap()
    }

    /// Whether Ch1 and Ch2 are within `tie` of each other at `s`.
    pub fn near_tie(&self, s: &SystemState, tie: f64) -> bool {
        let row = self.q[self.space.index(s)];
        let (a, b) = (row[Action::Ch1.index()], row[Action::Ch2.index()]);
        (a - b).abs() <= tie * a.abs().max(b.abs()).max(1.0)
    }

    /// The greedy decisions at `l2 = 0` as an executable policy.
    pub fn greedy_policy(&self, name: impl Into<String>) -> TabularPolicy {
        let cap = self.space.age_cap();
        let column = |l1| {
            (1..=cap)
                .map(|delta| match self.action(&SystemState::new(delta, l1, 0)) {
                    Action::Idle => Action::Ch1,
                    u => u,
                })
                .collect()
        };
        TabularPolicy::new(name, column(ChannelState::Off), column(ChannelState::On))
    }

    /// Largest age used by structural checks.
    pub fn check_horizon(&self) -> u64 {
        let cap = self.space.age_cap();
        cap - (CAP_ZONE * cap as f64).ceil() as u64
    }
}

/// Discounted value iteration.
///
/// Stops when successive iterates differ by less than `tol (1 - alpha)` in
/// sup norm, or earlier when the span bounds on the fixed point are
/// narrower than `tol`, in which case the bound midpoint is returned.
pub fn value_iteration_discounted(
    params: &ChannelParams,
    alpha: f64,
    cost: &CostFunction,
    opts: &OracleOptions,
) -> Result<ValueSolution> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidDiscount(alpha));
    }
    let t = Tables::new(params, cost, opts)?;
    let n = t.space.len();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let factor = alpha / (1.0 - alpha);
    let mut sup = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = t.best(i, &v, alpha);
            let diff = *slot - v[i];
            lo = lo.min(diff);
            hi = hi.max(diff);
        }
        std::mem::swap(&mut v, &mut next);
        sup = lo.abs().max(hi.abs());
        let done = if sup < opts.tol * (1.0 - alpha) {
            true
        } else if factor * (hi - lo) < opts.tol {
            let shift = factor * 0.5 * (lo + hi);
            v.iter_mut().for_each(|x| *x += shift);
            true
        } else {
            false
        };
        if done {
            let q = t.q_table(&v, alpha, 0.0);
            let residual = bellman_residual(&v, &q);
            return Ok(ValueSolution {
                criterion: Criterion::Discounted(alpha),
                params: *params,
                cost: *cost,
                policy: greedy(&q),
                space: t.space,
                action_set: opts.action_set,
                j: v,
                q,
                gain: None,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "discounted value iteration",
        iterations: opts.max_iterations,
        residual: sup,
    })
}

fn bellman_residual(v: &[f64], q: &[[f64; 3]]) -> f64 {
    v.iter()
        .zip(q)
        .map(|(x, row)| (x - row.iter().copied().fold(f64::INFINITY, f64::min)).abs())
        .fold(0.0, f64::max)
}

/// Relative value iteration for the average-cost problem.
///
/// Runs on the lazy chain `(1 - t) I + t P` to rule out periodicity and
/// stops once the span of `T h - h` drops below `tol` relative to the gain.
/// States whose bias is too large to resolve `tol` in double precision only
/// need to agree up to their rounding noise; the gain is the midpoint of the
/// bounds over the remaining states.
pub fn relative_value_iteration(
    params: &ChannelParams,
    cost: &CostFunction,
    opts: &OracleOptions,
) -> Result<ValueSolution> {
    let t = Tables::new(params, cost, opts)?;
    average_cost_iteration(params, cost, opts, t, |t, i, h| t.best(i, h, 1.0))
}

/// Gain and bias of a fixed, possibly randomised, stationary policy.
pub fn evaluate_policy(
    params: &ChannelParams,
    policy: &dyn Policy,
    cost: &CostFunction,
    opts: &OracleOptions,
) -> Result<ValueSolution> {
    let t = Tables::new(params, cost, opts)?;
    // Ch1 probability at decision states, None while Channel 2 is busy
    let mix: Vec<Option<f64>> = (0..t.space.len())
        .map(|i| {
            let s = t.space.state(i);
            s.is_idle().then(|| policy.ch1_probability(&s))
        })
        .collect();
    average_cost_iteration(params, cost, opts, t, move |t, i, h| {
        let e = match mix[i] {
            None => t.expect(i, Action::Idle.index(), h),
            Some(w) => t
                .expect(i, Action::Ch1.index(), h)
                .zip(t.expect(i, Action::Ch2.index(), h))
                .map(|(one, two)| w * one + (1.0 - w) * two),
        };
        t.cost[i] + e.expect("policy actions are admissible")
    })
}

fn average_cost_iteration(
    params: &ChannelParams,
    cost: &CostFunction,
    opts: &OracleOptions,
    t: Tables,
    operator: impl Fn(&Tables, usize, &[f64]) -> f64,
) -> Result<ValueSolution> {
    let n = t.space.len();
    let anchor = t.space.index(&SystemState::new(1, ChannelState::On, 0));
    let mut h = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut span = f64::INFINITY;
    let mut last_gain = 0.0_f64;
    for it in 1..=opts.max_iterations {
        // `clean` bounds use states whose values carry rounding noise below
        // the tolerance; `loose` bounds give every state its noise allowance.
        let tol = opts.tol * last_gain.abs().max(1.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut loose_lo, mut loose_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, slot) in next.iter_mut().enumerate() {
            let th = operator(&t, i, &h);
            let diff = th - h[i];
            let noise = ROUNDING_SLACK * f64::EPSILON * th.abs().max(h[i].abs());
            if noise <= 0.25 * tol {
                lo = lo.min(diff);
                hi = hi.max(diff);
            }
            loose_lo = loose_lo.min(diff + noise);
            loose_hi = loose_hi.max(diff - noise);
            *slot = h[i] + LAZY * diff;
        }
        let base = next[anchor];
        next.iter_mut().for_each(|x| *x -= base);
        std::mem::swap(&mut h, &mut next);
        span = (hi - lo).max(loose_hi - loose_lo);
        let gain = 0.5 * (lo + hi);
        last_gain = gain;
        if span < tol {
            let q = t.q_table(&h, 1.0, gain);
            let residual = bellman_residual(&h, &q);
            return Ok(ValueSolution {
                criterion: Criterion::Average,
                params: *params,
                cost: *cost,
                policy: greedy(&q),
                space: t.space,
                action_set: opts.action_set,
                j: h,
                q,
                gain: Some(gain),
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "relative value iteration",
        iterations: opts.max_iterations,
        residual: span,
    })
}

/// Monotonicity of the greedy decisions `u(delta, l1, 0)` in `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub l1: ChannelState,
    /// At most one switch between Ch1 and Ch2, near-ties ignored.
    pub monotone: bool,
    /// Action before the switch (or the only action if none).
    pub first: Option<Action>,
    /// First age taking the second action.
    pub switch_age: Option<u64>,
    /// Threshold form implied by the switch; `None` when constant.
    pub form: Option<Direction>,
    pub expected: Direction,
    /// Monotone and either constant or switching in the expected form.
    pub consistent: bool,
    pub near_ties: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub region: Region,
    /// Region under the discounted sign functions, for discounted solutions.
    pub region_discounted: Option<Region>,
    pub off: MonotoneReport,
    pub on: MonotoneReport,
    pub ages_checked: u64,
}

impl StructureReport {
    pub fn consistent(&self) -> bool {
        self.off.consistent && self.on.consistent
    }
}

/// Directions `(l1 = 0, l1 = 1)` of an optimal threshold policy per region.
pub fn expected_directions(region: Region) -> (Direction, Direction) {
    use Direction::*;
    match region {
        Region::B1 => (NonIncreasing, NonIncreasing),
        Region::B2 => (NonDecreasing, NonIncreasing),
        Region::B3 => (NonDecreasing, NonDecreasing),
        Region::B4 => (NonIncreasing, NonDecreasing),
    }
}

/// Relative Q gap under which Ch1 and Ch2 count as tied.
pub const STRUCTURE_TIE: f64 = 1e-7;

pub fn check_threshold_structure(sol: &ValueSolution) -> Result<StructureReport> {
    let region = classify_region(&sol.params).region;
    let region_discounted = match sol.criterion {
        Criterion::Discounted(alpha) => Some(classify_region_discounted(&sol.params, alpha)?.region),
        Criterion::Average => None,
    };
    let (e0, e1) = expected_directions(region_discounted.unwrap_or(region));
    let horizon = sol.check_horizon();
    let scan = |l1: ChannelState, expected: Direction| {
        let mut first = None;
        let mut switch_age = None;
        let mut monotone = true;
        let mut near_ties = 0;
        for delta in 1..=horizon {
            let s = SystemState::new(delta, l1, 0);
            if sol.near_tie(&s, STRUCTURE_TIE) {
                near_ties += 1;
                continue;
            }
            let u = sol.action(&s);
            match (first, switch_age) {
                (None, _) => first = Some(u),
                (Some(f), None) if u != f => switch_age = Some(delta),
                (Some(f), Some(_)) if u == f => monotone = false,
                _ => {}
            }
        }
        let form = match (first, switch_age) {
            (Some(Action::Ch1), Some(_)) => Some(Direction::NonDecreasing),
            (Some(Action::Ch2), Some(_)) => Some(Direction::NonIncreasing),
            _ => None,
        };
        MonotoneReport {
            l1,
            monotone,
            first,
            switch_age,
            form,
            expected,
            consistent: monotone && form.is_none_or(|f| f == expected),
            near_ties,
        }
    };
    Ok(StructureReport {
        region,
        region_discounted,
        off: scan(ChannelState::Off, e0),
        on: scan(ChannelState::On, e1),
        ages_checked: horizon,
    })
}

/// Q-difference identities on a converged discounted solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SupermodReport {
    pub alpha: f64,
    /// `sum_{i<d} alpha^i`.
    pub m: f64,
    pub region_discounted: Region,
    /// `max |L(delta, l1, Ch2) - m|` over tested ages.
    pub ch2_max_deviation: f64,
    /// Ages `2..=max_age` are tested; beyond it the truncation is felt.
    pub max_age: u64,
    /// `L(delta, 0, Ch1) - m` is expected positive in B2/B3, nonpositive
    /// otherwise.
    pub expect_above: bool,
    pub off_violations: Vec<u64>,
    /// Smallest age from which `L(delta, 1, Ch1) - m` keeps one sign.
    pub on_crossover: Option<u64>,
    pub on_above_after_crossover: Option<bool>,
    /// `L(delta,1,Ch1) <= L(delta,0,Ch1) <= m` on all tested ages, checked
    /// only for B1 with `p + q >= 1`.
    pub ordered_chain: Option<bool>,
}

impl SupermodReport {
    pub fn ch2_identity_holds(&self, tol: f64) -> bool {
        self.ch2_max_deviation < tol
    }

    pub fn off_sign_holds(&self) -> bool {
        self.off_violations.is_empty()
    }
}

/// Ages whose Q-differences are unaffected by the truncation to within
/// `1e-12` relative: mass leaking upward decays like `(alpha max(p,q))^k`.
fn trusted_age(sol: &ValueSolution, alpha: f64) -> u64 {
    let rate = alpha * sol.params.p().max(sol.params.q());
    let reach = ((1e-12_f64).ln() / rate.ln()).ceil() as u64 + u64::from(sol.params.d());
    sol.check_horizon().min(sol.age_cap().saturating_sub(reach))
}

pub fn check_supermodularity(sol: &ValueSolution, slack: f64) -> Result<SupermodReport> {
    let alpha = match sol.criterion {
        Criterion::Discounted(a) => a,
        Criterion::Average => {
            return Err(Error::InvalidConfig(
                "supermodularity checks need a discounted solution".into(),
            ))
        }
    };
    let params = &sol.params;
    let region = classify_region_discounted(params, alpha)?.region;
    let m = geometric_sum(alpha, params.d());
    let max_age = trusted_age(sol, alpha);
    let diff = |delta: u64, l1: ChannelState, u: Action| {
        sol.q_value(&SystemState::new(delta, l1, 0), u) - sol.q_value(&SystemState::new(delta - 1, l1, 0), u)
    };
    let expect_above = matches!(region, Region::B2 | Region::B3);
    let mut ch2_max_deviation: f64 = 0.0;
    let mut off_violations = Vec::new();
    let mut on_signs = Vec::new();
    let mut ordered = true;
    for delta in 2..=max_age {
        for l1 in [ChannelState::Off, ChannelState::On] {
            ch2_max_deviation = ch2_max_deviation.max((diff(delta, l1, Action::Ch2) - m).abs());
        }
        let off = diff(delta, ChannelState::Off, Action::Ch1) - m;
        let ok = if expect_above { off > -slack } else { off <= slack };
        if !ok {
            off_violations.push(delta);
        }
        let on = diff(delta, ChannelState::On, Action::Ch1) - m;
        on_signs.push((delta, on > 0.0));
        if on > off + slack || off > slack {
            ordered = false;
        }
    }
    let (on_crossover, on_above_after_crossover) = match on_signs.last() {
        Some(&(_, last)) => {
            let start = on_signs
                .iter()
                .rev()
                .take_while(|(_, sign)| *sign == last)
                .last()
                .map(|(d, _)| *d);
            (start, Some(last))
        }
        None => (None, None),
    };
    let ordered_chain = (region == Region::B1 && params.p() + params.q() >= 1.0).then_some(ordered);
    Ok(SupermodReport {
        alpha,
        m,
        region_discounted: region,
        ch2_max_deviation,
        max_age,
        expect_above,
        off_violations,
        on_crossover,
        on_above_after_crossover,
        ordered_chain,
    })
}

/// Outcome of the zero-wait check on the unrestricted action set.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroWaitReport {
    pub states_checked: usize,
    /// States with `l2 = 0` where idling is strictly better than both channels.
    pub idle_strictly_better: Vec<SystemState>,
    /// Largest `min(Q1, Q2) - Q(idle)` seen; nonpositive when the check holds.
    pub max_idle_advantage: f64,
}

/// Solve on the unrestricted action set and confirm idling is never the
/// unique minimiser when both channels are free.
pub fn check_zero_wait(
    params: &ChannelParams,
    cost: &CostFunction,
    opts: &OracleOptions,
    tie: f64,
) -> Result<ZeroWaitReport> {
    let opts = OracleOptions {
        action_set: ActionSet::Unrestricted,
        ..*opts
    };
    let sol = relative_value_iteration(params, cost, &opts)?;
    let mut report = ZeroWaitReport {
        states_checked: 0,
        idle_strictly_better: Vec::new(),
        max_idle_advantage: f64::NEG_INFINITY,
    };
    for delta in 1..=sol.check_horizon() {
        for l1 in [ChannelState::Off, ChannelState::On] {
            let s = SystemState::new(delta, l1, 0);
            let row = sol.q[sol.space.index(&s)];
            let busy = row[Action::Ch1.index()].min(row[Action::Ch2.index()]);
            let advantage = busy - row[Action::Idle.index()];
            report.max_idle_advantage = report.max_idle_advantage.max(advantage);
            if advantage > tie * busy.abs().max(1.0) {
                report.idle_strictly_better.push(s);
            }
            report.states_checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::solve;
    use crate::policy::Baseline;
    use approx::assert_relative_eq;

    fn params(p: f64, q: f64, d: u32) -> ChannelParams {
        ChannelParams::new(p, q, d).unwrap()
    }

    #[test]
    fn parses_costs() {
        assert_eq!("linear".parse::<CostFunction>().unwrap(), CostFunction::Linear);
        assert_eq!(
            "exp:1.5".parse::<CostFunction>().unwrap(),
            CostFunction::Exponential { eta: 1.5 }
        );
        assert!("exp:abc".parse::<CostFunction>().is_err());
        assert!("quadratic".parse::<CostFunction>().is_err());
        assert_eq!(CostFunction::Exponential { eta: 10.0 }.eval(400), COST_CLIP);
    }

    #[test]
    fn fixed_policy_gains() {
        let pr = params(0.5, 0.5, 3);
        let opts = OracleOptions::with_cap(200);
        let ch2 = evaluate_policy(&pr, &Baseline::Sub6, &CostFunction::Linear, &opts).unwrap();
        assert_relative_eq!(ch2.gain.unwrap(), 4.0, max_relative = 1e-9);
        let ch1 = evaluate_policy(&pr, &Baseline::MmWave, &CostFunction::Linear, &opts).unwrap();
        assert_relative_eq!(ch1.gain.unwrap(), 2.0, max_relative = 1e-9);
    }

    #[test]
    fn rvi_matches_closed_form() {
        for &(p, q, d) in &[(0.5, 0.5, 3), (0.9, 0.2, 4), (0.95, 0.05, 3), (0.6, 0.95, 2)] {
            let pr = params(p, q, d);
            let sol = relative_value_iteration(&pr, &CostFunction::Linear, &OracleOptions::with_cap(400)).unwrap();
            let exact = solve(&pr).unwrap().delta_opt;
            assert_relative_eq!(sol.gain.unwrap(), exact, max_relative = 1e-6);
            assert!(sol.residual < 1e-6);
        }
    }

    #[test]
    fn discounted_values_are_monotone_in_age() {
        let pr = params(0.9, 0.3, 3);
        let sol = value_iteration_discounted(&pr, 0.95, &CostFunction::Linear, &OracleOptions::with_cap(200)).unwrap();
        for l1 in [ChannelState::Off, ChannelState::On] {
            for l2 in 0..3 {
                for delta in 2..200 {
                    let a = sol.value(&SystemState::new(delta - 1, l1, l2));
                    let b = sol.value(&SystemState::new(delta, l1, l2));
                    assert!(b >= a - 1e-9);
                }
            }
        }
    }

    #[test]
    fn rejects_small_caps() {
        let pr = params(0.9, 0.3, 5);
        let r = relative_value_iteration(&pr, &CostFunction::Linear, &OracleOptions::with_cap(99));
        assert!(matches!(r, Err(Error::CapTooSmall { required: 100, .. })));
    }

    #[test]
    fn greedy_policy_table_matches_solution() {
        let pr = params(0.95, 0.1, 3);
        let sol = relative_value_iteration(&pr, &CostFunction::Linear, &OracleOptions::with_cap(120)).unwrap();
        let pol = sol.greedy_policy("greedy");
        for delta in 1..=120 {
            for l1 in [ChannelState::Off, ChannelState::On] {
                assert_eq!(pol.action_at(delta, l1), sol.action(&SystemState::new(delta, l1, 0)));
            }
        }
    }
}
