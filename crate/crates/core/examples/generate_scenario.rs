//! Generate the default plume scenario, print its column summary and
//! optionally write it as CSV.
//!
//! cargo run --release --example generate_scenario -- [out.csv] [seed]

use std::time::Instant;

use plumestack::plume::{generate, scenario_stats, ScenarioConfig};
use plumestack::tabular::write_csv;

fn main() -> plumestack::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next();
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let cfg = ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    };

    let start = Instant::now();
    let s = generate(&cfg)?;
    println!(
        "{} rows in {:.2?}; clamp floor {:.4} ppm-V, peak {:.3} ppm-V, positive fraction {:.4}",
        s.dataset.n_rows(),
        start.elapsed(),
        s.floor_ppm,
        s.peak_ppm,
        s.positive_fraction
    );
    print!("{}", scenario_stats(&s.dataset)?.to_text());
    if let Some(path) = out {
        write_csv(std::path::Path::new(&path), &s.dataset)?;
        println!("wrote {path}");
    }
    Ok(())
}
