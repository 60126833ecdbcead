//! Walk the preprocessing steps on a generated scenario: constant-column
//! pruning, leak labeling and balancing, the 4:1 split and regression
//! standardization.
//!
//! cargo run --release --example preprocess -- [seed]

use plumestack::pipeline::{prepare_classification, prepare_regression};
use plumestack::plume::{generate_scenario, ScenarioConfig};

fn main() -> plumestack::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed must be an integer"));
    let ds = generate_scenario(&ScenarioConfig { seed, ..ScenarioConfig::default() })?;

    let clf = prepare_classification(&ds, seed, 0.8, false)?;
    println!("{} rows, {} with positive tracer ({:.2}%)", clf.n_input_rows, clf.n_positive,
        100.0 * clf.n_positive as f64 / clf.n_input_rows as f64);
    println!("dropped constant columns: {:?}", clf.dropped_columns);
    println!("features: {}", clf.feature_names.join(", "));
    println!(
        "classification: {} balanced rows -> {} train / {} test",
        clf.n_task_rows,
        clf.x_train.n_rows(),
        clf.x_test.n_rows()
    );

    let reg = prepare_regression(&ds, seed, 0.8)?;
    println!(
        "regression: {} positive-tracer rows -> {} train / {} test",
        reg.n_task_rows,
        reg.x_train.n_rows(),
        reg.x_test.n_rows()
    );
    println!("\n{:<26} {:>12} {:>12}", "training column", "mean", "std");
    let scaler = reg.standardizer.as_ref().expect("regression is standardized");
    for (name, stats) in scaler.columns() {
        println!("{name:<26} {:>12.4} {:>12.4}", stats.mean, stats.std);
    }
    Ok(())
}
