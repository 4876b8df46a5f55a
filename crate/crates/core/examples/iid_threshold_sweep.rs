//! Optimal threshold for an i.i.d. Channel 1 (q = 1 - p) as p crosses the
//! point 1 - 1/d where Channel 2 stops being worth using.
//!
//! cargo run --example iid_threshold_sweep -- [d...]

use aoi_hetero::closed_form::iid_threshold;
use aoi_hetero::ChannelParams;

fn main() -> aoi_hetero::Result<()> {
    let mut ds: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if ds.is_empty() {
        ds = vec![10, 20, 50];
    }
    for d in ds {
        let p_star = 1.0 - 1.0 / f64::from(d);
        println!("d = {d}, p* = {p_star}");
        for k in [-2, 0, 1, 2, 5, 10, 20, 50, 100] {
            let p = p_star + f64::from(k) * 0.001;
            if p >= 1.0 {
                break;
            }
            let shown = match iid_threshold(&ChannelParams::new(p, 1.0 - p, d)?)? {
                Some(s) => s.to_string(),
                None => "never uses Channel 2".into(),
            };
            println!("  p = {p:.3}: {shown}");
        }
    }
    Ok(())
}
