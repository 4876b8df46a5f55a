//! Relative value iteration against the closed form, plus the threshold
//! structure of the greedy policy it produces.
//!
//! cargo run --release --example mdp_crosscheck -- [p] [q] [d] [age_cap]

use aoi_hetero::mdp::{check_threshold_structure, relative_value_iteration, CostFunction, OracleOptions};
use aoi_hetero::{solve, ChannelParams, ChannelState, SystemState};

fn main() -> aoi_hetero::Result<()> {
    let a: Vec<f64> = std::env::args().skip(1).filter_map(|v| v.parse().ok()).collect();
    let (p, q) = (a.first().copied().unwrap_or(0.95), a.get(1).copied().unwrap_or(0.3));
    let d = a.get(2).map_or(5, |&v| v as u32);
    let cap = a.get(3).map_or(1000, |&v| v as u64);
    let params = ChannelParams::new(p, q, d)?;
    let exact = solve(&params)?;
    let sol = relative_value_iteration(&params, &CostFunction::Linear, &OracleOptions::with_cap(cap))?;
    let gain = sol.gain.unwrap_or(f64::NAN);
    println!("closed form {:.12}", exact.delta_opt);
    println!("RVI gain    {gain:.12} ({} sweeps, cap {cap})", sol.iterations);
    println!("relative gap {:.3e}", (gain - exact.delta_opt).abs() / exact.delta_opt);

    let rep = check_threshold_structure(&sol)?;
    for m in [&rep.off, &rep.on] {
        println!(
            "l1={:?}: first {:?}, switch at {:?}, form {:?} (expected {}), near ties {}",
            m.l1, m.first, m.switch_age, m.form, m.expected, m.near_ties
        );
    }
    println!("closed-form policy {}", exact.policy);
    let row: String = (1..=3 * u64::from(d))
        .map(|delta| {
            let s = SystemState::new(delta, ChannelState::Off, 0);
            format!("{}", sol.action(&s))
        })
        .collect::<Vec<_>>()
        .join(" ");
    println!("greedy actions at l1=OFF, ages 1..{}: {row}", 3 * d);
    Ok(())
}
