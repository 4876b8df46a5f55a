//! Q-function differences of the discounted problem: the Channel 2
//! difference is a constant, and the Channel 1 difference sits on the side
//! of that constant predicted by the discounted region.
//!
//! cargo run --release --example supermodularity -- [alpha]

use aoi_hetero::mdp::{check_supermodularity, value_iteration_discounted, CostFunction, OracleOptions};
use aoi_hetero::{classify_region_discounted, ChannelParams};

fn main() -> aoi_hetero::Result<()> {
    let alpha: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.99);
    let opts = OracleOptions::with_cap(500);
    for (p, q, d) in [(0.3, 0.2, 3), (0.8, 0.5, 3), (0.85, 0.05, 4), (0.45, 0.1, 2)] {
        let params = ChannelParams::new(p, q, d)?;
        let region = classify_region_discounted(&params, alpha)?.region;
        let sol = value_iteration_discounted(&params, alpha, &CostFunction::Linear, &opts)?;
        let rep = check_supermodularity(&sol, 1e-9)?;
        println!(
            "{params} {region}: m = {:.6}, max |L2 - m| = {:.2e}, L1(OFF) {} m on ages 2..={}, violations {:?}",
            rep.m,
            rep.ch2_max_deviation,
            if rep.expect_above { ">" } else { "<=" },
            rep.max_age,
            rep.off_violations
        );
    }
    Ok(())
}
