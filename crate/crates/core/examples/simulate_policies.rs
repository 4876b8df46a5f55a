//! Monte Carlo comparison of the optimal policy and the baselines on
//! shared channel paths, next to the exact chain values.
//!
//! cargo run --release --example simulate_policies -- [p] [q] [d] [horizon]

use aoi_hetero::chain::average_age;
use aoi_hetero::mdp::{CostFunction, OracleOptions};
use aoi_hetero::sim::{compare_policies, SimConfig};
use aoi_hetero::{solve, Baseline, ChannelParams, Policy};

fn main() -> aoi_hetero::Result<()> {
    let a: Vec<f64> = std::env::args().skip(1).filter_map(|v| v.parse().ok()).collect();
    let (p, q) = (a.first().copied().unwrap_or(0.9), a.get(1).copied().unwrap_or(0.3));
    let d = a.get(2).map_or(5, |&v| v as u32);
    let horizon = a.get(3).map_or(200_000, |&v| v as u64);
    let params = ChannelParams::new(p, q, d)?;
    let config = SimConfig {
        horizon,
        replications: 10,
        seed: 1,
        ..SimConfig::default()
    };
    let rows = compare_policies(&params, &CostFunction::Linear, &config, &OracleOptions::default())?;
    let optimal = solve(&params)?.policy;
    let exact: [&dyn Policy; 4] = [&optimal, &Baseline::MmWave, &Baseline::Sub6, &Baseline::Random];
    println!("{params}, horizon {horizon}, warmup {}", rows[0].warmup);
    for (r, pol) in rows.iter().zip(exact) {
        let chain = average_age(&params, pol, 2000)?;
        println!(
            "{:<12} {:>10.5} ± {:.5}   exact {:>10.5}   {}",
            r.policy_name,
            r.mean,
            r.std_error,
            chain,
            // a deterministic sawtooth has no spread; its residual is the partial last cycle
            if r.std_error > 1e-12 * r.mean {
                format!("z {:+.2}", (r.mean - chain) / r.std_error)
            } else {
                "deterministic".to_string()
            }
        );
    }
    Ok(())
}
