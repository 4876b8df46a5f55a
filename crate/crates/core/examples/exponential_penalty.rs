//! Exponential age penalty: the value-iteration optimal policy against the
//! three baselines, evaluated exactly on the truncated chain.
//!
//! cargo run --release --example exponential_penalty -- [p] [d] [q...]

use aoi_hetero::mdp::{evaluate_policy, relative_value_iteration, CostFunction, OracleOptions};
use aoi_hetero::{Baseline, ChannelParams, Policy};

fn main() -> aoi_hetero::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let p = args.first().copied().unwrap_or(0.9);
    let d = args.get(1).map_or(20, |&v| v as u32);
    let qs: Vec<f64> = if args.len() > 2 { args[2..].to_vec() } else { vec![0.1, 0.3, 0.5, 0.7, 0.9] };
    let cost = CostFunction::Exponential { eta: 1.0 / (p - 0.003) };
    let opts = OracleOptions::with_cap(500);
    println!("cost {cost}, p={p}, d={d}, age cap {}", opts.age_cap);
    println!("{:>6} {:>14} {:>14} {:>14} {:>14} {:>10}", "q", "optimal", "mmWave", "sub-6GHz", "Random", "min ratio");
    for q in qs {
        let params = ChannelParams::new(p, q, d)?;
        let optimal = relative_value_iteration(&params, &cost, &opts)?.gain.unwrap_or(f64::NAN);
        let baselines = [Baseline::MmWave, Baseline::Sub6, Baseline::Random];
        let mut costs = Vec::new();
        for b in &baselines {
            costs.push(evaluate_policy(&params, b as &dyn Policy, &cost, &opts)?.gain.unwrap_or(f64::NAN));
        }
        let ratio = costs.iter().copied().fold(f64::INFINITY, f64::min) / optimal;
        println!(
            "{q:>6} {optimal:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {ratio:>10.3}",
            costs[0], costs[1], costs[2]
        );
    }
    Ok(())
}
