//! Stationary distribution of the optimal policy's chain: average age, the
//! age distribution and how much time Channel 1 spends ON.
//!
//! cargo run --example chain_stationary -- [p] [q] [d]

use aoi_hetero::chain::{stationary, ChainOptions};
use aoi_hetero::{solve, Baseline, ChannelParams, Policy};

fn main() -> aoi_hetero::Result<()> {
    let a: Vec<f64> = std::env::args().skip(1).filter_map(|v| v.parse().ok()).collect();
    let (p, q) = (a.first().copied().unwrap_or(0.9), a.get(1).copied().unwrap_or(0.5));
    let d = a.get(2).map_or(4, |&v| v as u32);
    let params = ChannelParams::new(p, q, d)?;
    let res = solve(&params)?;
    let opts = ChainOptions::with_cap(1000);
    let policies: [(&str, &dyn Policy); 4] = [
        ("optimal", &res.policy),
        ("mmWave", &Baseline::MmWave),
        ("sub-6GHz", &Baseline::Sub6),
        ("Random", &Baseline::Random),
    ];
    for (name, pol) in policies {
        let sol = stationary(&params, pol, &opts)?;
        println!(
            "{name:<9} average age {:>10.6}  recurrent states {:>5}  ON fraction {:.4}",
            sol.average_age,
            sol.states.len(),
            sol.on_fraction()
        );
    }
    let sol = stationary(&params, &res.policy, &opts)?;
    println!("\nage distribution under {}:", res.policy);
    for (age, mass) in sol.age_marginal().into_iter().take(15) {
        println!("  {age:>3} {mass:.6} {}", "#".repeat((mass * 200.0).round() as usize));
    }
    Ok(())
}
