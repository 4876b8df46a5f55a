//! Stationary analysis of the Markov chain induced by a stationary policy on
//! the age-truncated state space.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{Error, Result};
use crate::model::{kernel, Action, ChannelParams, ChannelState, StateSpace, SystemState, DEFAULT_AGE_CAP};
use crate::policy::Policy;

/// Linear solver for the balance equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Dense LU below [`ChainOptions::dense_limit`] states, Gauss-Seidel above.
    Auto,
    Dense,
    /// Gauss-Seidel sweeps in age order. Age only grows by one per slot
    /// between resets, so each sweep propagates mass along whole paths.
    Iterative,
}

#[derive(Debug, Clone, Copy)]
pub struct ChainOptions {
    pub age_cap: u64,
    pub method: Method,
    pub dense_limit: usize,
    pub tol: f64,
    pub max_sweeps: u64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            age_cap: DEFAULT_AGE_CAP,
            method: Method::Auto,
            dense_limit: 1200,
            tol: 1e-14,
            max_sweeps: 200_000,
        }
    }
}

impl ChainOptions {
    pub fn with_cap(age_cap: u64) -> Self {
        Self {
            age_cap,
            ..Self::default()
        }
    }
}

/// Stationary distribution on the unique recurrent class.
#[derive(Debug, Clone)]
pub struct ChainSolution {
    pub states: Vec<SystemState>,
    pub pi: Vec<f64>,
    pub average_age: f64,
    /// The recurrent class reaches the age cap, so the truncation is active.
    pub touches_cap: bool,
    pub method: Method,
}

impl ChainSolution {
    pub fn average_cost(&self, cost: impl Fn(u64) -> f64) -> f64 {
        self.states
            .iter()
            .zip(&self.pi)
            .map(|(s, w)| w * cost(s.delta))
            .sum()
    }

    /// Stationary mass per age, ascending.
    pub fn age_marginal(&self) -> Vec<(u64, f64)> {
        let mut out = std::collections::BTreeMap::new();
        for (s, w) in self.states.iter().zip(&self.pi) {
            *out.entry(s.delta).or_insert(0.0) += w;
        }
        out.into_iter().collect()
    }

    /// Stationary probability that the previous Channel-1 slot was ON.
    pub fn on_fraction(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.pi)
            .filter(|(s, _)| s.l1 == ChannelState::On)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn probability(&self, state: &SystemState) -> f64 {
        self.states
            .iter()
            .position(|s| s == state)
            .map_or(0.0, |i| self.pi[i])
    }
}

/// Transition structure restricted to the states reachable from `(1,1,0)`.
struct Reachable {
    states: Vec<SystemState>,
    out: Vec<Vec<(usize, f64)>>,
}

fn explore(params: &ChannelParams, policy: &dyn Policy, space: &StateSpace) -> Reachable {
    let cap = space.age_cap();
    let mut slot = vec![usize::MAX; space.len()];
    let mut states = Vec::new();
    let mut out: Vec<Vec<(usize, f64)>> = Vec::new();
    let start = SystemState::new(1, ChannelState::On, 0);
    slot[space.index(&start)] = 0;
    states.push(start);
    let mut head = 0;
    while head < states.len() {
        let s = states[head];
        let mut row: Vec<(SystemState, f64)> = Vec::with_capacity(4);
        let branches: &[(Action, f64)] = if s.is_idle() {
            let w = policy.ch1_probability(&s);
            &[(Action::Ch1, w), (Action::Ch2, 1.0 - w)]
        } else {
            &[(Action::Idle, 1.0)]
        };
        for &(u, w) in branches {
            if w <= 0.0 {
                continue;
            }
            for (t, pr) in kernel(&s, u, params, cap) {
                if pr > 0.0 {
                    row.push((t, w * pr));
                }
            }
        }
        let mut edges: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (t, pr) in row {
            let ti = space.index(&t);
            if slot[ti] == usize::MAX {
                slot[ti] = states.len();
                states.push(t);
            }
            match edges.iter_mut().find(|(j, _)| *j == slot[ti]) {
                Some(e) => e.1 += pr,
                None => edges.push((slot[ti], pr)),
            }
        }
        out.push(edges);
        head += 1;
    }
    Reachable { states, out }
}

/// Indices of the unique closed communicating class.
fn recurrent_class(r: &Reachable) -> Result<Vec<usize>> {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(r.states.len(), 2 * r.states.len());
    for _ in 0..r.states.len() {
        g.add_node(());
    }
    for (i, row) in r.out.iter().enumerate() {
        for &(j, _) in row {
            g.add_edge(NodeIndex::new(i), NodeIndex::new(j), ());
        }
    }
    let sccs = tarjan_scc(&g);
    let mut component = vec![0usize; r.states.len()];
    for (c, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = c;
        }
    }
    let bottom: Vec<usize> = (0..sccs.len())
        .filter(|&c| {
            sccs[c]
                .iter()
                .all(|n| r.out[n.index()].iter().all(|&(j, _)| component[j] == c))
        })
        .collect();
    if bottom.len() != 1 {
        return Err(Error::RecurrentClasses(bottom.len()));
    }
    let mut members: Vec<usize> = sccs[bottom[0]].iter().map(|n| n.index()).collect();
    members.sort_by_key(|&i| r.states[i]);
    Ok(members)
}

fn solve_dense(out: &[Vec<(usize, f64)>]) -> Result<Vec<f64>> {
    let n = out.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, row) in out.iter().enumerate() {
        for &(j, pr) in row {
            a[(j, i)] += pr;
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(Error::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(x.iter().copied().collect())
}

fn solve_iterative(out: &[Vec<(usize, f64)>], tol: f64, max_sweeps: u64) -> Result<Vec<f64>> {
    let n = out.len();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut stay = vec![0.0; n];
    for (i, row) in out.iter().enumerate() {
        for &(j, pr) in row {
            if i == j {
                stay[i] += pr;
            } else {
                incoming[j].push((i, pr));
            }
        }
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut change = f64::INFINITY;
    for _ in 0..max_sweeps {
        change = 0.0;
        for j in 0..n {
            let v: f64 = incoming[j].iter().map(|&(i, pr)| pi[i] * pr).sum::<f64>() / (1.0 - stay[j]);
            change = f64::max(change, (v - pi[j]).abs());
            pi[j] = v;
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= total);
        let peak = pi.iter().copied().fold(0.0, f64::max);
        if change <= tol * peak.max(f64::MIN_POSITIVE) {
            return Ok(pi);
        }
    }
    Err(Error::NonConvergence {
        solver: "gauss-seidel stationary solve",
        iterations: max_sweeps,
        residual: change,
    })
}

/// Stationary distribution of the chain induced by `policy`.
pub fn stationary(params: &ChannelParams, policy: &dyn Policy, opts: &ChainOptions) -> Result<ChainSolution> {
    let required = 3 * u64::from(params.d());
    if opts.age_cap < required {
        return Err(Error::CapTooSmall {
            age_cap: opts.age_cap,
            required,
        });
    }
    let space = StateSpace::new(params.d(), opts.age_cap)?;
    let reach = explore(params, policy, &space);
    let members = recurrent_class(&reach)?;
    let mut local = vec![usize::MAX; reach.states.len()];
    for (k, &i) in members.iter().enumerate() {
        local[i] = k;
    }
    let out: Vec<Vec<(usize, f64)>> = members
        .iter()
        .map(|&i| reach.out[i].iter().map(|&(j, pr)| (local[j], pr)).collect())
        .collect();
    let method = match opts.method {
        Method::Auto if out.len() <= opts.dense_limit => Method::Dense,
        Method::Auto => Method::Iterative,
        m => m,
    };
    let mut pi = match method {
        Method::Dense => solve_dense(&out)?,
        _ => solve_iterative(&out, opts.tol, opts.max_sweeps)?,
    };
    pi.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    let states: Vec<SystemState> = members.iter().map(|&i| reach.states[i]).collect();
    let average_age = states.iter().zip(&pi).map(|(s, w)| w * s.delta as f64).sum();
    let touches_cap = states
        .iter()
        .zip(&pi)
        .any(|(s, &w)| s.delta == opts.age_cap && w > 0.0);
    Ok(ChainSolution {
        states,
        pi,
        average_age,
        touches_cap,
        method,
    })
}

/// Average age of `policy` with default options and the given cap.
pub fn average_age(params: &ChannelParams, policy: &dyn Policy, age_cap: u64) -> Result<f64> {
    Ok(stationary(params, policy, &ChainOptions::with_cap(age_cap))?.average_age)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{candidate_constants, FamilyModel, Family};
    use crate::policy::Baseline;
    use approx::assert_relative_eq;

    fn params(p: f64, q: f64, d: u32) -> ChannelParams {
        ChannelParams::new(p, q, d).unwrap()
    }

    #[test]
    fn baselines_match_closed_forms() {
        let pr = params(0.9, 0.6, 4);
        let c = candidate_constants(&pr);
        let opts = ChainOptions::with_cap(400);
        let a1 = stationary(&pr, &Baseline::MmWave, &opts).unwrap();
        assert_relative_eq!(a1.average_age, c.always_ch1, max_relative = 1e-10);
        let a2 = stationary(&pr, &Baseline::Sub6, &opts).unwrap();
        assert_relative_eq!(a2.average_age, c.always_ch2, max_relative = 1e-12);
        assert!(!a2.touches_cap);
    }

    #[test]
    fn threshold_families_match_ratios() {
        let pr = params(0.95, 0.1, 5);
        for family in Family::ALL {
            let m = FamilyModel::new(family, &pr).unwrap();
            let lo = family.domain_min(5);
            for s in lo..lo + 4 {
                if !family.contains(s, 5) {
                    continue;
                }
                let pol = family.policy(s, 5);
                let sol = stationary(&pr, &pol, &ChainOptions::with_cap(600)).unwrap();
                assert_relative_eq!(sol.average_age, m.ratio(s).unwrap(), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let pr = params(0.8, 0.4, 3);
        for pol in [Baseline::MmWave, Baseline::Random] {
            let mut opts = ChainOptions::with_cap(300);
            opts.method = Method::Dense;
            let a = stationary(&pr, &pol, &opts).unwrap();
            opts.method = Method::Iterative;
            let b = stationary(&pr, &pol, &opts).unwrap();
            assert_eq!(a.states, b.states);
            for (x, y) in a.pi.iter().zip(&b.pi) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cap_too_small() {
        let pr = params(0.8, 0.4, 5);
        let r = stationary(&pr, &Baseline::MmWave, &ChainOptions::with_cap(14));
        assert!(matches!(r, Err(Error::CapTooSmall { required: 15, .. })));
    }

    #[test]
    fn marginal_sums_to_one() {
        let pr = params(0.7, 0.7, 3);
        let sol = stationary(&pr, &Baseline::Random, &ChainOptions::with_cap(200)).unwrap();
        let total: f64 = sol.age_marginal().iter().map(|(_, w)| w).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        assert_relative_eq!(sol.on_fraction(), pr.stationary_on(), max_relative = 1e-10);
    }
}
