//! The root-finding view of each threshold family: h(beta) is positive,
//! decreasing and concave, and its root is the family's best ratio.
//!
//! cargo run --example bisection_roots -- [p] [q] [d]

use aoi_hetero::closed_form::{FamilyModel, DEFAULT_EPS};
use aoi_hetero::{classify_region, Candidate, ChannelParams};

fn main() -> aoi_hetero::Result<()> {
    let a: Vec<f64> = std::env::args().skip(1).filter_map(|v| v.parse().ok()).collect();
    let (p, q) = (a.first().copied().unwrap_or(0.93), a.get(1).copied().unwrap_or(0.1));
    let d = a.get(2).map_or(5, |&v| v as u32);
    let params = ChannelParams::new(p, q, d)?;
    let region = classify_region(&params).region;
    println!("{params} in {region}");
    for family in Candidate::for_region(region).iter().filter_map(|c| c.family()) {
        let model = FamilyModel::new(family, &params)?;
        let root = model.solve(DEFAULT_EPS)?;
        let (l, o) = model.lo();
        println!(
            "family {family}: beta = {:.10} after {} steps, s = {}, l = {l:.6}, o = {o:.6}",
            root.beta, root.iterations, root.threshold
        );
        for k in 0..=4 {
            let beta = root.beta * f64::from(k) / 2.0;
            println!("    h({beta:>9.5}) = {:>12.6}  s(beta) = {}", model.h(beta), model.threshold(beta));
        }
    }
    Ok(())
}
