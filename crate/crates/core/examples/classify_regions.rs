//! Region map of the (p, q) square for a fixed Channel 2 delay.
//!
//! cargo run --example classify_regions -- [d]

use aoi_hetero::{classify_region, ChannelParams};

fn main() -> aoi_hetero::Result<()> {
    let d: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    println!("rows: p from 0.95 down to 0.05; columns: q from 0.05 to 0.95 (d = {d})");
    for i in (1..=19).rev() {
        let p = f64::from(i) * 0.05;
        let mut row = format!("p={p:.2} ");
        for j in 1..=19 {
            let q = f64::from(j) * 0.05;
            let info = classify_region(&ChannelParams::new(p, q, d)?);
            row.push_str(&format!(" {}", info.region));
        }
        println!("{row}");
    }
    let sample = ChannelParams::new(0.9, 0.3, d)?;
    let info = classify_region(&sample);
    println!("\n{sample}: F={} G={} H={} -> {}", info.f, info.g, info.h, info.region);
    Ok(())
}
