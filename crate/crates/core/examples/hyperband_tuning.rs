//! Hyperband brackets and the density-ratio sampler against uniform random
//! search on a shifted quadratic whose low-budget evaluations are noisier.
//!
//! cargo run --release --example hyperband_tuning -- [max_budget] [eta]

use plumestack::tuning::{
    hyperband_schedule, run_search, Config, Direction, Domain, SamplerKind, SamplerSettings, SearchSettings,
    SearchSpace,
};

fn objective(c: &Config, budget: f64) -> plumestack::Result<f64> {
    let centers = [1.5, -2.0, 0.5, 3.0];
    let sq: f64 = c.values().zip(centers).map(|(v, m)| (v.as_f64().unwrap() - m).powi(2)).sum();
    Ok(1.0 + sq + 0.5 / budget)
}

fn main() -> plumestack::Result<()> {
    let mut args = std::env::args().skip(1);
    let max_budget: f64 = args.next().map_or(27.0, |s| s.parse().expect("max_budget must be a number"));
    let eta: u32 = args.next().map_or(3, |s| s.parse().expect("eta must be an integer"));

    let schedule = hyperband_schedule(max_budget, eta)?;
    println!("R = {max_budget}, eta = {eta}");
    for b in &schedule {
        let rungs: Vec<String> = b.rungs.iter().map(|(n, r)| format!("{n} x {r}")).collect();
        println!("  s = {}: {}", b.s, rungs.join(" -> "));
    }

    let space = (0..4).fold(SearchSpace::new(), |s, i| {
        s.with(&format!("x{i}"), Domain::Real { low: -5.0, high: 5.0, log: false })
    });
    let total: f64 = schedule.iter().map(|b| b.cost()).sum::<f64>() * 3.0;
    println!("\n{:<8} {:>12} {:>12}", "seed", "bohb", "random");
    let mut wins = 0;
    for seed in 0..10 {
        let best = |kind| -> plumestack::Result<f64> {
            let settings = SearchSettings {
                max_budget,
                eta,
                total_budget: Some(total),
                direction: Direction::Minimize,
                seed,
                sampler: SamplerSettings { kind, ..SamplerSettings::default() },
            };
            Ok(run_search(&space, objective, &settings)?.best.objective.unwrap_or(f64::NAN))
        };
        let (b, r) = (best(SamplerKind::Bohb)?, best(SamplerKind::Random)?);
        wins += usize::from(b < r);
        println!("{seed:<8} {b:>12.4} {r:>12.4}");
    }
    println!("model-based sampler better in {wins}/10 runs (optimum {:.4})", 1.0 + 0.5 / max_budget);
    Ok(())
}
