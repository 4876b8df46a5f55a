//! Exact optimum for one parameter triple: region, every competing
//! candidate and the resulting threshold policy.
//!
//! cargo run --example closed_form_solve -- [p] [q] [d]

use aoi_hetero::{solve, ChannelParams};

fn main() -> aoi_hetero::Result<()> {
    let a: Vec<String> = std::env::args().skip(1).collect();
    let p = a.first().and_then(|v| v.parse().ok()).unwrap_or(0.95);
    let q = a.get(1).and_then(|v| v.parse().ok()).unwrap_or(0.3);
    let d = a.get(2).and_then(|v| v.parse().ok()).unwrap_or(5);
    let res = solve(&ChannelParams::new(p, q, d)?)?;
    println!("{} in region {}", res.params, res.region.region);
    for c in &res.candidates {
        let s = c.threshold.map_or(String::new(), |s| format!(" (s = {s})"));
        println!("  {:<11} {:.12}{s}", c.candidate.name(), c.value);
    }
    println!("optimal average age {:.12}", res.delta_opt);
    println!("policy {}", res.policy);
    if res.argmin.len() > 1 {
        println!("tied candidates: {:?}", res.argmin);
    }
    Ok(())
}
