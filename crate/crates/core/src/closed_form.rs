//! Exact average-age solver built on ratio-of-sums expressions.
//!
//! Every candidate stationary policy induces a renewal structure whose
//! average age is `f / g` for explicit sums `f` and `g`. The four threshold
//! families are parametrised by the Channel-1 threshold `s` after an OFF
//! state; their optimum over `s` is the root of
//! `h(beta) = min_s f(s) - beta g(s)`, located by bisection. The minimiser of
//! `f - beta g` is available in closed form through the finite-difference
//! identity
//!
//! ```text
//! p^{-(s-1)} (f(s+1) - f(s)) = (1 - d(1-p)) s + l
//! p^{-(s-1)} (g(s+1) - g(s)) = o
//! ```
//!
//! with constants `l`, `o` that are derived numerically from `f`, `g`.

use std::fmt;

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::model::{classify_region, matrix_powers, ChannelParams, MatrixPowers, Region, RegionInfo};
use crate::policy::{Direction, ThresholdPolicy, ThresholdSet};

/// Bisection tolerance on `beta`.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Thresholds beyond this are reported as diagnostics.
pub const LARGE_THRESHOLD: u64 = 1_000_000;

/// Upper clamp on computed thresholds; `p^s` has underflowed long before.
const MAX_THRESHOLD: u64 = 1 << 40;

/// Ranges up to this length are summed term by term.
const LOOP_LIMIT: u64 = 4096;

const IDENTITY_TOL: f64 = 1e-8;

const TIE_TOL: f64 = 1e-12;

/// The four threshold families, indexed as in the policy tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    One = 1,
    Two = 2,
    Three = 3,
    Four = 4,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::One, Family::Two, Family::Three, Family::Four];

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Smallest admissible `s`.
    pub fn domain_min(self, d: u32) -> u64 {
        match self {
            Family::Two => 1,
            _ => u64::from(d) + 1,
        }
    }

    /// Largest admissible `s`, if bounded.
    pub fn domain_max(self, d: u32) -> Option<u64> {
        match self {
            Family::Two => Some(u64::from(d)),
            _ => None,
        }
    }

    pub fn contains(self, s: u64, d: u32) -> bool {
        s >= self.domain_min(d) && self.domain_max(d).is_none_or(|hi| s <= hi)
    }

    /// The threshold policy whose average age is `f(s) / g(s)`.
    pub fn policy(self, s: u64, d: u32) -> ThresholdPolicy {
        let d = u64::from(d);
        let set = match self {
            Family::One | Family::Two => ThresholdSet::from(d + 1),
            Family::Three => ThresholdSet::range(2, d),
            Family::Four => ThresholdSet::single(1),
        };
        ThresholdPolicy {
            dir0: Direction::NonDecreasing,
            lambda0: s,
            dir1: Direction::NonDecreasing,
            lambda1: set.smallest(),
            lambda1_set: set,
        }
    }

    /// Actions at `(1, 1, 0)` and `(d, 1, 0)`; `true` means Channel 1.
    pub fn on_actions(self) -> (bool, bool) {
        match self {
            Family::One | Family::Two => (true, true),
            Family::Three => (true, false),
            Family::Four => (false, false),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Power sums in `p` with direct summation for short ranges.
#[derive(Debug, Clone, Copy)]
struct Sums {
    p: f64,
}

impl Sums {
    fn pow(&self, e: i64) -> f64 {
        match i32::try_from(e) {
            Ok(e) => self.p.powi(e),
            Err(_) => self.p.powf(e as f64),
        }
    }

    /// `(sum_{k=0}^{n} p^k, sum_{k=0}^{n} k p^k)`.
    fn moments(&self, n: u64) -> (f64, f64) {
        let p = self.p;
        if n <= LOOP_LIMIT {
            let (mut s0, mut s1, mut pk) = (0.0, 0.0, 1.0);
            for k in 0..=n {
                s0 += pk;
                s1 += k as f64 * pk;
                pk *= p;
            }
            (s0, s1)
        } else {
            let nf = n as f64;
            let pn = self.pow(n as i64);
            let s0 = (1.0 - pn * p) / (1.0 - p);
            let s1 = p * (1.0 - (nf + 1.0) * pn + nf * pn * p) / ((1.0 - p) * (1.0 - p));
            (s0, s1)
        }
    }

    /// `sum_{i=lo}^{hi} p^{i-1}`; empty ranges give zero.
    fn geo(&self, lo: u64, hi: u64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        self.pow(lo as i64 - 1) * self.moments(hi - lo).0
    }

    /// `sum_{i=lo}^{hi} i p^{i-1}`.
    fn igeo(&self, lo: u64, hi: u64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        let (s0, s1) = self.moments(hi - lo);
        self.pow(lo as i64 - 1) * (lo as f64 * s0 + s1)
    }

    /// `sum_{i=lo}^{hi} i p^{i-lo}`.
    fn igeo_shifted(&self, lo: u64, hi: u64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        let (s0, s1) = self.moments(hi - lo);
        lo as f64 * s0 + s1
    }
}

/// `sum_{i=lo}^{hi} i`.
fn arith(lo: u64, hi: u64) -> f64 {
    if hi < lo {
        return 0.0;
    }
    let (lo, hi) = (lo as f64, hi as f64);
    (hi - lo + 1.0) * (lo + hi) / 2.0
}

/// The closed-form average ages of the non-threshold candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateConstants {
    /// Channel 2 always; 1 after an OFF slot except Channel 1 after `(d,1,0)`.
    pub f0_over_g0: f64,
    /// Channel 1 after an OFF slot, Channel 2 after an ON slot.
    pub f0p_over_g0p: f64,
    pub always_ch1: f64,
    pub always_ch2: f64,
}

pub fn candidate_constants(params: &ChannelParams) -> CandidateConstants {
    let (p, q) = (params.p(), params.q());
    let d = u64::from(params.d());
    let df = d as f64;
    let MatrixPowers { a, b, a_on, b_on, .. } = matrix_powers(params, params.d());

    let ratio_off = (b_on * q + b * (1.0 - q)) / a;
    let f0 = q * arith(1, d) + (1.0 - q) * arith(d + 1, 2 * d) + ratio_off * arith(d, 2 * d - 1) + df;
    let g0 = df + ratio_off * df + 1.0;

    let f0p = arith(1, d)
        + (a_on / b_on) * arith(d, 2 * d - 1)
        + df / (1.0 - p)
        + p / ((1.0 - p) * (1.0 - p));
    let g0p = df / b_on + 1.0 / (1.0 - p);

    let always_ch1 =
        ((1.0 - q) * (2.0 - p) + (1.0 - p) * (1.0 - p)) / ((2.0 - q - p) * (1.0 - p));

    CandidateConstants {
        f0_over_g0: f0 / g0,
        f0p_over_g0p: f0p / g0p,
        always_ch1,
        always_ch2: (3.0 * df - 1.0) / 2.0,
    }
}

/// Precomputed data for one threshold family at fixed parameters.
#[derive(Debug, Clone, Copy)]
pub struct FamilyModel {
    family: Family,
    params: ChannelParams,
    powers: MatrixPowers,
    sums: Sums,
    l: f64,
    o: f64,
}

impl FamilyModel {
    /// Derive `l` and `o` and verify the finite-difference identity.
    ///
    /// Requires `1 - d(1-p) > 0`.
    pub fn new(family: Family, params: &ChannelParams) -> Result<Self> {
        if params.drift() <= 0.0 {
            return Err(Error::OutsideThresholdRegion {
                family: family.index(),
            });
        }
        let mut model = Self::expressions(family, params);
        let s0 = match family {
            Family::Two => 2,
            _ => u64::from(params.d()) + 1,
        };
        let (l, o) = model.difference_at(s0);
        model.l = l;
        model.o = o;
        for s in [s0 + 1, s0 + 2, s0 + 5] {
            let (l_s, o_s) = model.difference_at(s);
            let deviation = ((l_s - l).abs() / l.abs().max(1.0)).max((o_s - o).abs() / o.abs().max(1.0));
            if deviation.is_nan() || deviation >= IDENTITY_TOL {
                return Err(Error::IdentityViolated {
                    family: family.index(),
                    s,
                    deviation,
                });
            }
        }
        let (tl, to) = tabulated_lo(family, params);
        if (tl - l).abs() > 1e-6 * l.abs().max(1.0) || (to - o).abs() > 1e-6 * o.abs().max(1.0) {
            debug!(
                "family {family} at {params}: derived (l, o) = ({l}, {o}), tabulated rows give ({tl}, {to})"
            );
        }
        Ok(model)
    }

    /// The `f`, `g` expressions alone; `l`, `o` are left as NaN.
    fn expressions(family: Family, params: &ChannelParams) -> Self {
        Self {
            family,
            params: *params,
            powers: matrix_powers(params, params.d()),
            sums: Sums { p: params.p() },
            l: f64::NAN,
            o: f64::NAN,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// The constants `(l, o)` of the finite-difference identity.
    pub fn lo(&self) -> (f64, f64) {
        (self.l, self.o)
    }

    fn difference_at(&self, s: u64) -> (f64, f64) {
        let (f0, g0) = self.raw(s);
        let (f1, g1) = self.raw(s + 1);
        // family 4 carries an extra factor p^{-(d-1)} in f and g
        let shift = match self.family {
            Family::Four => i64::from(self.params.d()),
            _ => 1,
        };
        let scale = self.sums.pow(-(s as i64 - shift));
        let l = scale * (f1 - f0) - self.params.drift() * s as f64;
        let o = scale * (g1 - g0);
        (l, o)
    }

    /// `(f(s), g(s))` on the family's domain.
    pub fn fg(&self, s: u64) -> Result<(f64, f64)> {
        let d = self.params.d();
        if !self.family.contains(s, d) {
            return Err(Error::OutsideDomain {
                family: self.family.index(),
                s,
            });
        }
        // thresholds 1 and 2 induce the same chain: (1,0,0) is unreachable
        if self.family == Family::Two && s == 1 {
            return Ok(self.raw(2));
        }
        Ok(self.raw(s))
    }

    /// The average age `f(s) / g(s)`.
    pub fn ratio(&self, s: u64) -> Result<f64> {
        let (f, g) = self.fg(s)?;
        Ok(f / g)
    }

    /// The expressions without domain checks; valid algebraically for all
    /// `s >= d` (families 1, 3, 4) and `s >= 2` (family 2).
    fn raw(&self, s: u64) -> (f64, f64) {
        let (p, q) = (self.params.p(), self.params.q());
        let d = u64::from(self.params.d());
        let df = d as f64;
        let MatrixPowers { a, b, a_on, b_on, .. } = self.powers;
        let m = &self.sums;
        let head = p / (1.0 - q);
        let ps = m.pow(s as i64 - 1);
        match self.family {
            Family::One => {
                let c = 1.0 - b * m.pow(s as i64 - d as i64) - (1.0 - q) * a * m.pow(s as i64 - d as i64 - 1);
                let f = c * (head + m.igeo(2, d))
                    + df * ps
                    + m.igeo(d + 1, s - 1)
                    + arith(s, s + d - 1) * ps;
                let g = c * (head + m.geo(2, d)) + ps + m.geo(d + 1, s - 1) + df * ps;
                (f, g)
            }
            Family::Two => {
                let c = b / (a * q);
                let f = head
                    + m.igeo(2, s)
                    + arith(s + 1, s + d - 1) * ps
                    + c * arith(d, 2 * d - 1) * ps
                    + ((1.0 - q) * arith(d + 1, 2 * d) + df) * ps / q;
                let g = head
                    + m.geo(2, s)
                    + (df - 1.0) * ps
                    + c * df * ps
                    + (df * (1.0 - q) + 1.0) * ps / q;
                (f, g)
            }
            Family::Three => {
                let e = 1.0 - m.pow(s as i64 - d as i64);
                let r = a / b_on;
                let f = e * (head + m.igeo(2, d - 1))
                    + m.igeo(d, s)
                    + r * ps * arith(d, 2 * d - 1)
                    + arith(s + 1, s + d - 1) * ps;
                let g = e * (head + m.geo(2, d - 1)) + m.geo(d, s) + r * ps * df + (df - 1.0) * ps;
                (f, g)
            }
            Family::Four => {
                let psd = m.pow(s as i64 - d as i64);
                let e = 1.0 - psd;
                let c = (a_on + (a - a_on) * psd) / b_on;
                let f = e * arith(1, d)
                    + c * arith(d, 2 * d - 1)
                    + arith(s + 1, s + d - 1) * psd
                    + m.igeo_shifted(d, s);
                let g = e * df + c * df + (df - 1.0) * psd + m.geo(d, s) / m.pow(d as i64 - 1);
                (f, g)
            }
        }
    }

    /// Minimiser of `f(s) - beta g(s)` over the family's domain.
    pub fn threshold(&self, beta: f64) -> u64 {
        let d = u64::from(self.params.d());
        let k = self.l - beta * self.o;
        let x = (-k / self.params.drift()).ceil();
        let c = if x.is_nan() {
            MAX_THRESHOLD
        } else if x <= 0.0 {
            0
        } else {
            (x as u64).min(MAX_THRESHOLD)
        };
        let s = match self.family {
            Family::Two => c.min(d).max(1),
            _ => c.max(d + 1),
        };
        if s > LARGE_THRESHOLD {
            warn!(
                "family {} at {}: threshold {s} exceeds {LARGE_THRESHOLD}",
                self.family, self.params
            );
        }
        s
    }

    /// `h(beta) = min_s f(s) - beta g(s)`.
    pub fn h(&self, beta: f64) -> f64 {
        let s = self.threshold(beta);
        let (f, g) = self.fg(s).expect("threshold lies in the domain");
        f - beta * g
    }

    /// Root of `h` on `[0, upper]` to within `eps`.
    pub fn bisect(&self, eps: f64, upper: f64) -> Result<BetaRoot> {
        if self.h(upper) >= 0.0 {
            return Err(Error::BracketFailure {
                family: self.family.index(),
                upper,
            });
        }
        let (mut lo, mut hi) = (0.0_f64, upper);
        let mut iterations = 0;
        while hi - lo >= eps {
            let mid = 0.5 * (lo + hi);
            if self.h(mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            iterations += 1;
        }
        let beta = 0.5 * (lo + hi);
        // resolve near-ties between neighbouring thresholds exactly
        let s0 = self.threshold(beta);
        let mut best = (s0, self.ratio(s0)?);
        for s in [s0.saturating_sub(1), s0 + 1] {
            if self.family.contains(s, self.params.d()) {
                let r = self.ratio(s)?;
                if r < best.1 {
                    best = (s, r);
                }
            }
        }
        Ok(BetaRoot {
            family: self.family,
            beta,
            threshold: best.0,
            ratio: best.1,
            iterations,
        })
    }

    /// Bisection with the default bracket `[0, 3d]`, widened until `h`
    /// changes sign.
    pub fn solve(&self, eps: f64) -> Result<BetaRoot> {
        let mut upper = 3.0 * f64::from(self.params.d());
        let mut last = None;
        for _ in 0..64 {
            match self.bisect(eps, upper) {
                Err(e @ Error::BracketFailure { .. }) => {
                    last = Some(e);
                    upper *= 2.0;
                }
                other => return other,
            }
        }
        Err(last.expect("loop ran"))
    }
}

/// `(l, o)` as read off the printed tables, kept for cross-checking only.
///
/// The second family's first sum has no printed summand; `i` is assumed.
pub fn tabulated_lo(family: Family, params: &ChannelParams) -> (f64, f64) {
    let (p, q) = (params.p(), params.q());
    let d = u64::from(params.d());
    let df = d as f64;
    let m = Sums { p };
    let MatrixPowers { a, b, b_on, .. } = matrix_powers(params, params.d());
    let head = p / (1.0 - q);
    let tail = df * (p - (1.0 - p) * (df - 1.0) / 2.0);
    match family {
        Family::One => {
            let c = -m.pow(1 - d as i64) * (b + (1.0 - q) * a) * (1.0 - p);
            (
                c * (head + m.igeo(2, d)) + tail,
                c * (head + m.geo(2, d)) + 1.0 - (1.0 - p) * df,
            )
        }
        Family::Two => {
            let c = b / (a * q);
            let l = -c * (1.0 - p) * arith(d - 1, 2 * d - 1)
                - ((1.0 - q) * arith(d + 1, 2 * d) + df + 1.0) * (1.0 - p) / q
                + tail;
            let o = p - (1.0 - p) * (1.0 + df * (1.0 - q)) / q - (1.0 - p) * df * (1.0 + c);
            (l, o)
        }
        Family::Three => {
            let pd = m.pow(-(d as i64));
            let li: f64 = (2..d).map(|i| i as f64 * m.pow(i as i64) * pd * (1.0 - p)).sum();
            let oi: f64 = (2..d).map(|i| m.pow(i as i64) * pd * (1.0 - p)).sum();
            let r = a / b_on;
            (
                head + li - arith(d, 2 * d - 1) * (1.0 - p) * r + (df - 1.0) * (p - df * (1.0 - p) / 2.0),
                head + oi + 1.0 - (1.0 - p) * (df - 1.0 + df * r),
            )
        }
        Family::Four => {
            let scale = m.pow(1 - d as i64);
            let l = -(1.0 - p) * arith(1, d - 1) - df * (1.0 - p) / (1.0 - a)
                + (df - 1.0) * (p - df * (1.0 - p) / 2.0);
            let o = -(1.0 - p) * df - (1.0 - p) * df / (1.0 - a) - (df - 1.0) * (1.0 - p) + 1.0;
            (scale * l, scale * o)
        }
    }
}

/// Result of the bisection for one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRoot {
    pub family: Family,
    /// Midpoint of the final bracket.
    pub beta: f64,
    /// Minimising threshold `s`.
    pub threshold: u64,
    /// `f(s) / g(s)` at the minimising threshold.
    pub ratio: f64,
    pub iterations: u32,
}

/// `(f(s), g(s))` for a threshold family; valid for any parameters.
pub fn fg_eval(family: Family, s: u64, params: &ChannelParams) -> Result<(f64, f64)> {
    FamilyModel::expressions(family, params).fg(s)
}

/// The constants `(l, o)` of the finite-difference identity.
pub fn lo_eval(family: Family, params: &ChannelParams) -> Result<(f64, f64)> {
    Ok(FamilyModel::new(family, params)?.lo())
}

pub fn s_threshold(family: Family, beta: f64, params: &ChannelParams) -> Result<u64> {
    Ok(FamilyModel::new(family, params)?.threshold(beta))
}

pub fn h_eval(family: Family, beta: f64, params: &ChannelParams) -> Result<f64> {
    Ok(FamilyModel::new(family, params)?.h(beta))
}

/// Root of `h` on `[0, 3d]`; fails with [`Error::BracketFailure`] when the
/// bracket holds no sign change.
pub fn bisect_beta(family: Family, params: &ChannelParams, eps: f64) -> Result<BetaRoot> {
    FamilyModel::new(family, params)?.bisect(eps, 3.0 * f64::from(params.d()))
}

/// A candidate optimal policy class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Candidate {
    Beta1,
    Beta2,
    Beta3,
    Beta4,
    F0G0,
    F0pG0p,
    AlwaysCh1,
    AlwaysCh2,
}

impl Candidate {
    pub fn name(self) -> &'static str {
        match self {
            Candidate::Beta1 => "beta1",
            Candidate::Beta2 => "beta2",
            Candidate::Beta3 => "beta3",
            Candidate::Beta4 => "beta4",
            Candidate::F0G0 => "f0/g0",
            Candidate::F0pG0p => "f0'/g0'",
            Candidate::AlwaysCh1 => "always_ch1",
            Candidate::AlwaysCh2 => "always_ch2",
        }
    }

    pub fn family(self) -> Option<Family> {
        match self {
            Candidate::Beta1 => Some(Family::One),
            Candidate::Beta2 => Some(Family::Two),
            Candidate::Beta3 => Some(Family::Three),
            Candidate::Beta4 => Some(Family::Four),
            _ => None,
        }
    }

    /// Candidates competing in a region, in tie-breaking order.
    pub fn for_region(region: Region) -> &'static [Candidate] {
        use Candidate::*;
        match region {
            Region::B1 => &[AlwaysCh1],
            Region::B2 => &[Beta1, Beta2, F0G0, AlwaysCh2],
            Region::B3 => &[Beta1, Beta2, Beta3, Beta4, AlwaysCh2],
            Region::B4 => &[F0pG0p, AlwaysCh1],
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateValue {
    pub candidate: Candidate,
    pub value: f64,
    /// Minimising `s` for the threshold families.
    pub threshold: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub params: ChannelParams,
    pub region: RegionInfo,
    pub delta_opt: f64,
    pub policy: ThresholdPolicy,
    /// Every candidate admissible in the region, in tie-breaking order.
    pub candidates: Vec<CandidateValue>,
    /// All candidates within the tie tolerance of the optimum; the first
    /// one determines `policy`.
    pub argmin: Vec<Candidate>,
}

impl SolveResult {
    pub fn value_of(&self, candidate: Candidate) -> Option<f64> {
        self.candidates
            .iter()
            .find(|c| c.candidate == candidate)
            .map(|c| c.value)
    }
}

fn policy_for(region: Region, candidate: Candidate, threshold: Option<u64>, d: u32) -> ThresholdPolicy {
    use Candidate::*;
    use Direction::*;
    let d = u64::from(d);
    let s = threshold.unwrap_or(1);
    let (dir0, lambda0, dir1, set) = match (region, candidate) {
        (Region::B1, _) => return ThresholdPolicy::always_ch1(),
        (Region::B2, Beta1 | Beta2) => (NonDecreasing, s, NonIncreasing, ThresholdSet::single(1)),
        (Region::B2, F0G0) => (NonDecreasing, 1, NonIncreasing, ThresholdSet::range(2, d)),
        (Region::B2, _) => (NonDecreasing, 1, NonIncreasing, ThresholdSet::from(d + 1)),
        (Region::B3, Beta1 | Beta2) => (NonDecreasing, s, NonDecreasing, ThresholdSet::from(d + 1)),
        (Region::B3, Beta3) => (NonDecreasing, s, NonDecreasing, ThresholdSet::range(2, d)),
        (Region::B3, Beta4) => (NonDecreasing, s, NonDecreasing, ThresholdSet::single(1)),
        (Region::B3, _) => (NonDecreasing, 1, NonDecreasing, ThresholdSet::range(1, d)),
        (Region::B4, F0pG0p) => (NonIncreasing, 1, NonDecreasing, ThresholdSet::single(1)),
        (Region::B4, _) => (NonIncreasing, 1, NonDecreasing, ThresholdSet::from(d + 1)),
    };
    ThresholdPolicy {
        dir0,
        lambda0,
        dir1,
        lambda1: set.smallest(),
        lambda1_set: set,
    }
}

/// Exact optimal average age and an optimal threshold policy.
pub fn solve(params: &ChannelParams) -> Result<SolveResult> {
    solve_with_eps(params, DEFAULT_EPS)
}

pub fn solve_with_eps(params: &ChannelParams, eps: f64) -> Result<SolveResult> {
    let region = classify_region(params);
    if region.near_boundary() {
        warn!("{params} lies within {} of a region boundary", crate::model::NEAR_BOUNDARY);
    }
    let consts = candidate_constants(params);
    let mut candidates = Vec::new();
    for &c in Candidate::for_region(region.region) {
        let (value, threshold) = match c {
            Candidate::F0G0 => (consts.f0_over_g0, None),
            Candidate::F0pG0p => (consts.f0p_over_g0p, None),
            Candidate::AlwaysCh1 => (consts.always_ch1, None),
            Candidate::AlwaysCh2 => (consts.always_ch2, None),
            _ => {
                let family = c.family().expect("threshold candidate");
                let root = FamilyModel::new(family, params)?.solve(eps)?;
                (root.ratio, Some(root.threshold))
            }
        };
        candidates.push(CandidateValue {
            candidate: c,
            value,
            threshold,
        });
    }
    let delta_opt = candidates
        .iter()
        .map(|c| c.value)
        .fold(f64::INFINITY, f64::min);
    let tie = TIE_TOL * delta_opt.abs().max(1.0);
    let argmin: Vec<Candidate> = candidates
        .iter()
        .filter(|c| c.value - delta_opt <= tie)
        .map(|c| c.candidate)
        .collect();
    let chosen = candidates
        .iter()
        .find(|c| c.candidate == argmin[0])
        .expect("argmin is a listed candidate");
    let policy = policy_for(region.region, chosen.candidate, chosen.threshold, params.d());
    Ok(SolveResult {
        params: *params,
        region,
        delta_opt,
        policy,
        candidates,
        argmin,
    })
}

/// Specialisation for an i.i.d. Channel 1 (`p + q = 1`), where the optimum
/// is a single non-decreasing threshold on the age.
pub fn solve_iid(params: &ChannelParams) -> Result<SolveResult> {
    solve_iid_with_eps(params, DEFAULT_EPS)
}

pub fn solve_iid_with_eps(params: &ChannelParams, eps: f64) -> Result<SolveResult> {
    if !params.is_iid() {
        return Err(Error::NotIid(params.p() + params.q() - 1.0));
    }
    let region = classify_region(params);
    let p = params.p();
    let d = u64::from(params.d());
    // at f = 0 the optimal threshold has diverged, so rounding noise above
    // zero is treated as the boundary itself
    if region.f <= crate::model::NEAR_BOUNDARY {
        let value = 1.0 / (1.0 - p);
        return Ok(SolveResult {
            params: *params,
            region,
            delta_opt: value,
            policy: ThresholdPolicy::always_ch1(),
            candidates: vec![CandidateValue {
                candidate: Candidate::AlwaysCh1,
                value,
                threshold: None,
            }],
            argmin: vec![Candidate::AlwaysCh1],
        });
    }
    let root = FamilyModel::new(Family::One, params)?.solve(eps)?;
    let ch2 = candidate_constants(params).always_ch2;
    let candidates = vec![
        CandidateValue {
            candidate: Candidate::Beta1,
            value: root.ratio,
            threshold: Some(root.threshold),
        },
        CandidateValue {
            candidate: Candidate::AlwaysCh2,
            value: ch2,
            threshold: None,
        },
    ];
    let delta_opt = root.ratio.min(ch2);
    let tie = TIE_TOL * delta_opt.max(1.0);
    let argmin: Vec<Candidate> = candidates
        .iter()
        .filter(|c| c.value - delta_opt <= tie)
        .map(|c| c.candidate)
        .collect();
    let policy = if argmin[0] == Candidate::Beta1 {
        ThresholdPolicy {
            dir0: Direction::NonDecreasing,
            lambda0: root.threshold,
            dir1: Direction::NonDecreasing,
            lambda1: root.threshold,
            lambda1_set: ThresholdSet::from(d + 1),
        }
    } else {
        ThresholdPolicy {
            dir0: Direction::NonDecreasing,
            lambda0: 1,
            dir1: Direction::NonDecreasing,
            lambda1: 1,
            lambda1_set: ThresholdSet::range(1, d),
        }
    };
    Ok(SolveResult {
        params: *params,
        region,
        delta_opt,
        policy,
        candidates,
        argmin,
    })
}

/// The optimal threshold for an i.i.d. Channel 1, `None` when the optimum
/// never uses Channel 2.
pub fn iid_threshold(params: &ChannelParams) -> Result<Option<u64>> {
    let res = solve_iid(params)?;
    Ok(match res.argmin[0] {
        Candidate::AlwaysCh1 => None,
        _ => Some(res.policy.lambda0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(p: f64, q: f64, d: u32) -> ChannelParams {
        ChannelParams::new(p, q, d).unwrap()
    }

    #[test]
    fn moments_closed_form_matches_loop() {
        let m = Sums { p: 0.9993 };
        let n = LOOP_LIMIT + 500;
        let (mut s0, mut s1, mut pk) = (0.0, 0.0, 1.0);
        for k in 0..=n {
            s0 += pk;
            s1 += k as f64 * pk;
            pk *= m.p;
        }
        let (c0, c1) = m.moments(n);
        assert_relative_eq!(c0, s0, max_relative = 1e-11);
        assert_relative_eq!(c1, s1, max_relative = 1e-10);
    }

    #[test]
    fn always_ch1_reduces_to_iid_value() {
        let pr = params(0.3, 0.7, 4);
        assert_relative_eq!(candidate_constants(&pr).always_ch1, 1.0 / 0.7, max_relative = 1e-14);
    }

    #[test]
    fn family_two_threshold_one_equals_two() {
        let model = FamilyModel::new(Family::Two, &params(0.95, 0.3, 5)).unwrap();
        assert_eq!(model.fg(1).unwrap(), model.fg(2).unwrap());
    }

    #[test]
    fn domains_are_enforced() {
        let pr = params(0.95, 0.3, 5);
        assert!(matches!(fg_eval(Family::One, 5, &pr), Err(Error::OutsideDomain { .. })));
        assert!(matches!(fg_eval(Family::Two, 6, &pr), Err(Error::OutsideDomain { .. })));
        assert!(fg_eval(Family::Three, 6, &pr).is_ok());
        assert!(matches!(
            lo_eval(Family::One, &params(0.5, 0.5, 2)),
            Err(Error::OutsideThresholdRegion { family: 1 })
        ));
    }

    #[test]
    fn identity_holds_across_s() {
        for &(p, q, d) in &[(0.95, 0.3, 5), (0.92, 0.8, 10), (0.9, 0.05, 3), (0.99, 0.5, 20)] {
            let pr = params(p, q, d);
            for family in Family::ALL {
                let m = FamilyModel::new(family, &pr).unwrap();
                let (l, o) = m.lo();
                let lo = family.domain_min(d);
                for s in lo..lo + 3 {
                    let (f0, g0) = m.raw(s);
                    let (f1, g1) = m.raw(s + 1);
                    let shift = if family == Family::Four { d as i32 } else { 1 };
                    let scale = p.powi(-(s as i32 - shift));
                    assert_relative_eq!(
                        scale * (f1 - f0),
                        pr.drift() * s as f64 + l,
                        max_relative = 1e-7,
                        epsilon = 1e-9
                    );
                    assert_relative_eq!(scale * (g1 - g0), o, max_relative = 1e-7, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn threshold_minimises_linearised_objective() {
        let pr = params(0.95, 0.3, 5);
        for family in Family::ALL {
            let m = FamilyModel::new(family, &pr).unwrap();
            for beta in [2.0, 5.0, 8.0, 12.0] {
                let s = m.threshold(beta);
                let (f, g) = m.fg(s).unwrap();
                let best = f - beta * g;
                let lo = family.domain_min(5);
                let hi = family.domain_max(5).unwrap_or(400);
                for t in lo..=hi {
                    let (f, g) = m.fg(t).unwrap();
                    assert!(f - beta * g >= best - 1e-9 * best.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn bisection_root_is_family_minimum() {
        let pr = params(0.95, 0.3, 5);
        for family in Family::ALL {
            let m = FamilyModel::new(family, &pr).unwrap();
            let root = m.solve(DEFAULT_EPS).unwrap();
            let lo = family.domain_min(5);
            let hi = family.domain_max(5).unwrap_or(400);
            let brute = (lo..=hi)
                .map(|t| m.ratio(t).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(root.ratio, brute, max_relative = 1e-12);
            assert!((root.beta - brute).abs() < 2.0 * DEFAULT_EPS);
        }
    }

    #[test]
    fn regions_pick_listed_candidates() {
        let b1 = solve(&params(0.5, 0.5, 10)).unwrap();
        assert_eq!(b1.region.region, Region::B1);
        assert_eq!(b1.argmin, vec![Candidate::AlwaysCh1]);
        assert_relative_eq!(b1.delta_opt, 2.0, max_relative = 1e-12);

        let b3 = solve(&params(0.95, 0.1, 5)).unwrap();
        assert_eq!(b3.region.region, Region::B3);
        let min = b3.candidates.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
        assert_eq!(b3.delta_opt, min);
    }

    #[test]
    fn iid_threshold_regimes() {
        // 1 - p >= 1/d: Channel 1 only
        let r = solve_iid(&params(0.5, 0.5, 3)).unwrap();
        assert_eq!(r.argmin[0], Candidate::AlwaysCh1);
        assert_relative_eq!(r.delta_opt, 2.0);
        let r = solve_iid(&params(0.95, 0.05, 5)).unwrap();
        assert!(r.delta_opt <= 7.0 + 1e-12);
        assert!(matches!(solve_iid(&params(0.9, 0.3, 5)), Err(Error::NotIid(_))));
    }

    #[test]
    fn iid_matches_general_solver() {
        for &(p, d) in &[(0.85, 10), (0.95, 5), (0.99, 20), (0.3, 4)] {
            let pr = params(p, 1.0 - p, d);
            let a = solve(&pr).unwrap();
            let b = solve_iid(&pr).unwrap();
            assert_relative_eq!(a.delta_opt, b.delta_opt, max_relative = 1e-9);
        }
    }
}
