//! End to end on the default scenario: train both tasks with the fast presets,
//! reload the regression artifact, and export per-timestep prediction grids
//! for the held-out timesteps.
//!
//! cargo run --release --example train_and_export -- [out_dir] [seed]

use std::path::PathBuf;

use plumestack::learners::Task;
use plumestack::pipeline::{artifact_path, cmd_predict, cmd_train, ModelArtifact, PipelineConfig, HOLDOUT_CSV};

fn main() -> plumestack::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/example".into()));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));

    let mut config = PipelineConfig {
        seed,
        out: out.clone(),
        ..PipelineConfig::default()
    };
    config.apply_preset("fast")?;
    let trained = cmd_train(&config)?;
    for t in &trained.tasks {
        println!("{:?} ({:.1?})\n{}", t.log.task, t.elapsed, t.log.test.to_text());
    }

    let path = artifact_path(&out, Task::Regression);
    let model = ModelArtifact::load(&path)?;
    println!(
        "loaded {} (seed {}, {} training rows, data {}...)",
        path.display(),
        model.metadata.master_seed,
        model.metadata.n_train,
        &model.metadata.data_fingerprint[..12]
    );
    let p = cmd_predict(&path, &out.join(HOLDOUT_CSV), &out.join("predictions"), true)?;
    println!("{} held-out predictions in ppm-V", p.n_rows);
    for f in &p.grid_files {
        println!("  {}", f.display());
    }
    Ok(())
}
