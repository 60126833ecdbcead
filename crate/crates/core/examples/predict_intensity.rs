//! Regress tracer concentration on cells that see the plume.
//!
//! Usage: predict_intensity [preset] [seed]   (default: fast-regression 0)

use std::time::Instant;

use plumestack::ensemble::{fit_stack, preset};
use plumestack::metrics::{regression_metrics, RegressionRow, ReportTable};
use plumestack::pipeline::{prepare_regression, split_holdout};
use plumestack::plume::{generate_scenario, ScenarioConfig};

fn main() -> plumestack::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset_name = args.next().unwrap_or_else(|| "fast-regression".into());
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);

    let ds = generate_scenario(&ScenarioConfig { seed, ..ScenarioConfig::default() })?;
    let (ds, _) = split_holdout(&ds, &[300.0, 312.0, 324.0])?;
    let data = prepare_regression(&ds, seed, 0.8)?;
    let target = data.target_stats().expect("regression data is standardized");
    println!(
        "{} positive-tracer rows, {} train / {} test; target mean {:.4} sd {:.4} ppm-V",
        data.n_task_rows,
        data.x_train.n_rows(),
        data.x_test.n_rows(),
        target.mean,
        target.std
    );

    let started = Instant::now();
    let stack = fit_stack(&data.x_train, &data.y_train, &preset(&preset_name)?, seed)?;
    println!("trained {preset_name} in {:.1?}", started.elapsed());

    let validation = stack.validation_predictions()?;
    let mut rows = Vec::new();
    for p in stack.predict_all(&data.x_test)? {
        let oof = validation.iter().find(|v| v.name == p.name);
        rows.push(RegressionRow {
            model: p.name.clone(),
            test: regression_metrics(&data.y_test, &p.values)?,
            validation_r2: match oof {
                Some(v) => Some(regression_metrics(&data.y_train, &v.values)?.r2),
                None => None,
            },
        });
    }
    println!("{}", ReportTable::Regression(rows).to_text());

    let physical_pred: Vec<f64> = stack.predict(&data.x_test)?.iter().map(|&v| target.unscale(v)).collect();
    let physical_true = data.split.test.column("tracer_concentration")?;
    let r = regression_metrics(physical_true, &physical_pred)?;
    println!("physical units: R2 {:.4}, RMSE {:.5} ppm-V", r.r2, r.rmse);
    Ok(())
}
