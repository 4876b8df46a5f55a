//! Seeded Monte Carlo simulation on the untruncated system.
//!
//! Randomness comes from ChaCha8 generators seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. Replication `r` draws its Channel-1
//! path from stream `2r` and policy coins from stream `2r + 1`. The channel
//! path does not depend on the policy, so policies simulated with the same
//! seed and replication see the same ON/OFF sequence slot by slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closed_form::solve;
use crate::error::{Error, Result};
use crate::mdp::{relative_value_iteration, CostFunction, OracleOptions};
use crate::model::{Action, ChannelParams, ChannelState, SystemState};
use crate::policy::{Baseline, Policy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: u64,
    pub replications: u32,
    pub seed: u64,
    /// Slots discarded before averaging; `None` picks [`default_warmup`].
    pub warmup: Option<u64>,
    /// Record the post-warmup age histogram.
    pub histogram: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 1_000_000,
            replications: 20,
            seed: 0,
            warmup: None,
            histogram: false,
        }
    }
}

/// `10 d max(1/(1-p), d)` slots.
pub fn default_warmup(params: &ChannelParams) -> u64 {
    let d = f64::from(params.d());
    (10.0 * d * (1.0 / (1.0 - params.p())).max(d)).ceil() as u64
}

impl SimConfig {
    fn warmup_for(&self, params: &ChannelParams) -> Result<u64> {
        let warmup = self.warmup.unwrap_or_else(|| default_warmup(params));
        if self.replications == 0 {
            return Err(Error::InvalidConfig("at least one replication is required".into()));
        }
        if warmup >= self.horizon {
            return Err(Error::InvalidConfig(format!(
                "horizon {} must exceed warmup {warmup}",
                self.horizon
            )));
        }
        Ok(warmup)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub policy_name: String,
    pub mean: f64,
    /// Standard error across replications; zero for a single replication.
    pub std_error: f64,
    pub per_replication: Vec<f64>,
    /// Fraction of averaged slots in which Channel 1 was ON.
    pub on_fraction: f64,
    /// Post-warmup slot counts per age, index = age; summed over replications.
    pub histogram: Option<Vec<u64>>,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
}

impl SimResult {
    /// Total-variation distance between the empirical age law and `pmf`
    /// given as `(age, probability)` pairs.
    pub fn age_tv_distance(&self, pmf: &[(u64, f64)]) -> Option<f64> {
        let hist = self.histogram.as_ref()?;
        let total: u64 = hist.iter().sum();
        let mut reference = vec![0.0; hist.len()];
        let mut outside = 0.0;
        for &(age, w) in pmf {
            match reference.get_mut(age as usize) {
                Some(slot) => *slot += w,
                None => outside += w,
            }
        }
        let inside: f64 = hist
            .iter()
            .zip(&reference)
            .map(|(&c, &w)| (c as f64 / total as f64 - w).abs())
            .sum();
        Some(0.5 * (inside + outside))
    }
}

/// Per-replication accumulator of one policy.
struct Track {
    state: SystemState,
    coins: Option<ChaCha8Rng>,
    cost: f64,
    histogram: Vec<u64>,
}

/// Advance one slot given the Channel-1 state `on` of this slot.
#[inline]
fn step(s: SystemState, u: Action, on: bool, d: u32) -> SystemState {
    let l1 = if on { ChannelState::On } else { ChannelState::Off };
    let older = s.delta + 1;
    match u {
        Action::Ch1 if on => SystemState::new(1, l1, 0),
        Action::Ch1 => SystemState::new(older, l1, 0),
        Action::Ch2 => SystemState::new(older, l1, d - 1),
        Action::Idle if s.l2 == 1 => SystemState::new(u64::from(d), l1, 0),
        Action::Idle => SystemState::new(older, l1, s.l2.saturating_sub(1)),
    }
}

struct Replication {
    costs: Vec<f64>,
    histograms: Vec<Vec<u64>>,
    on_slots: u64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn run_replication(
    policies: &[&dyn Policy],
    params: &ChannelParams,
    cost: &CostFunction,
    config: &SimConfig,
    warmup: u64,
    rep: u64,
) -> Replication {
    let d = params.d();
    let mut channel = stream(config.seed, 2 * rep);
    let mut tracks: Vec<Track> = policies
        .iter()
        .map(|pol| Track {
            state: SystemState::new(1, ChannelState::On, 0),
            coins: (!pol.is_deterministic()).then(|| stream(config.seed, 2 * rep + 1)),
            cost: 0.0,
            histogram: Vec::new(),
        })
        .collect();
    let mut prev = ChannelState::On;
    let mut on_slots = 0;
    for t in 0..config.horizon {
        let on = channel.random::<f64>() < params.on_probability(prev);
        let counted = t >= warmup;
        if counted && on {
            on_slots += 1;
        }
        for (pol, track) in policies.iter().zip(tracks.iter_mut()) {
            let s = track.state;
            debug_assert_eq!(s.l1, prev);
            if counted {
                track.cost += cost.eval(s.delta);
                if config.histogram {
                    let i = s.delta as usize;
                    if track.histogram.len() <= i {
                        track.histogram.resize(i + 1, 0);
                    }
                    track.histogram[i] += 1;
                }
            }
            let u = if !s.is_idle() {
                Action::Idle
            } else {
                let coin = track.coins.as_mut().map_or(0.0, |rng| rng.random::<f64>());
                pol.action(&s, coin)
            };
            track.state = step(s, u, on, d);
        }
        prev = if on { ChannelState::On } else { ChannelState::Off };
    }
    let slots = (config.horizon - warmup) as f64;
    Replication {
        costs: tracks.iter().map(|t| t.cost / slots).collect(),
        histograms: tracks.into_iter().map(|t| t.histogram).collect(),
        on_slots,
    }
}

/// Simulate several policies in lockstep on shared channel paths.
pub fn simulate_many(
    policies: &[&dyn Policy],
    params: &ChannelParams,
    cost: &CostFunction,
    config: &SimConfig,
) -> Result<Vec<SimResult>> {
    let warmup = config.warmup_for(params)?;
    let reps: Vec<Replication> = (0..u64::from(config.replications))
        .into_par_iter()
        .map(|rep| run_replication(policies, params, cost, config, warmup, rep))
        .collect();
    let slots = (config.horizon - warmup) as f64 * reps.len() as f64;
    let on_fraction = reps.iter().map(|r| r.on_slots as f64).sum::<f64>() / slots;
    Ok(policies
        .iter()
        .enumerate()
        .map(|(k, pol)| {
            let per_replication: Vec<f64> = reps.iter().map(|r| r.costs[k]).collect();
            let n = per_replication.len() as f64;
            let mean = per_replication.iter().sum::<f64>() / n;
            let std_error = if per_replication.len() > 1 {
                let var = per_replication.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            let histogram = config.histogram.then(|| {
                let mut total: Vec<u64> = Vec::new();
                for r in &reps {
                    let h = &r.histograms[k];
                    if total.len() < h.len() {
                        total.resize(h.len(), 0);
                    }
                    total.iter_mut().zip(h).for_each(|(a, b)| *a += b);
                }
                total
            });
            SimResult {
                policy_name: pol.name(),
                mean,
                std_error,
                per_replication,
                on_fraction,
                histogram,
                horizon: config.horizon,
                warmup,
                seed: config.seed,
            }
        })
        .collect())
}

pub fn simulate(
    policy: &dyn Policy,
    params: &ChannelParams,
    cost: &CostFunction,
    config: &SimConfig,
) -> Result<SimResult> {
    Ok(simulate_many(&[policy], params, cost, config)?.remove(0))
}

/// The optimal policy: closed form for linear cost, greedy relative value
/// iteration policy on `age_cap` otherwise.
pub fn age_optimal_policy(
    params: &ChannelParams,
    cost: &CostFunction,
    opts: &OracleOptions,
) -> Result<Box<dyn Policy>> {
    if cost.is_linear() {
        Ok(Box::new(solve(params)?.policy))
    } else {
        let sol = relative_value_iteration(params, cost, opts)?;
        Ok(Box::new(sol.greedy_policy("Age-optimal")))
    }
}

/// Age-optimal against the three baselines, in the order Age-optimal,
/// mmWave, sub-6GHz, Random.
pub fn compare_policies(
    params: &ChannelParams,
    cost: &CostFunction,
    config: &SimConfig,
    opts: &OracleOptions,
) -> Result<Vec<SimResult>> {
    let optimal = age_optimal_policy(params, cost, opts)?;
    let policies: [&dyn Policy; 4] = [&*optimal, &Baseline::MmWave, &Baseline::Sub6, &Baseline::Random];
    simulate_many(&policies, params, cost, config)
}
