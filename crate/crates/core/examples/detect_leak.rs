//! Train a stacked classifier that flags cells downwind of the release.
//!
//! Usage: detect_leak [preset] [seed]   (default: fast-classification 0)

use std::time::Instant;

use plumestack::ensemble::{fit_stack, preset};
use plumestack::metrics::{evaluate_classification, ClassificationRow, ReportTable};
use plumestack::pipeline::{prepare_classification, split_holdout};
use plumestack::plume::{generate_scenario, ScenarioConfig};

fn main() -> plumestack::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset_name = args.next().unwrap_or_else(|| "fast-classification".into());
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);

    let config = ScenarioConfig { seed, ..ScenarioConfig::default() };
    let ds = generate_scenario(&config)?;
    let (ds, _) = split_holdout(&ds, &[300.0, 312.0, 324.0])?;
    let data = prepare_classification(&ds, seed, 0.8, false)?;
    println!(
        "{} positive of {} rows; {} balanced rows, {} train / {} test; features: {}",
        data.n_positive,
        data.n_input_rows,
        data.n_task_rows,
        data.x_train.n_rows(),
        data.x_test.n_rows(),
        data.feature_names.join(", ")
    );

    let started = Instant::now();
    let stack = fit_stack(&data.x_train, &data.y_train, &preset(&preset_name)?, seed)?;
    println!("trained {preset_name} in {:.1?}", started.elapsed());

    let mut rows = Vec::new();
    for p in stack.predict_all(&data.x_test)? {
        rows.push(ClassificationRow {
            model: p.name.clone(),
            report: evaluate_classification(&data.y_test, &p.values)?,
        });
    }
    println!("{}", ReportTable::Classification(rows).to_text());
    let ens = stack.final_ensemble();
    for (name, w) in ens.members.iter().zip(&ens.weights) {
        println!("  {name:<24} {w:.3}");
    }
    Ok(())
}
