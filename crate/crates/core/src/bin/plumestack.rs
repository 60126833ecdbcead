use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plumestack::pipeline::{
    cmd_evaluate, cmd_generate, cmd_predict, cmd_report, cmd_train, cmd_tune, task_name, PipelineConfig,
    TaskSelection,
};
use plumestack::{Error, Result};

/// Leak detection and intensity regression with stacked ensembles.
#[derive(Parser)]
#[command(name = "plumestack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic scenario CSV and its stats sidecar.
    Generate(Common),
    /// Train the configured stack(s) and write artifacts, reports and a log.
    Train {
        #[command(flatten)]
        common: Common,
        /// Preset name, or `paper` / `fast` for both tasks.
        #[arg(long)]
        preset: Option<String>,
        /// Stack depth.
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long, value_parser = ["classification", "regression", "both"])]
        task: Option<String>,
    },
    /// Score a saved model on a CSV.
    Evaluate {
        model: PathBuf,
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict a CSV with a saved model.
    Predict {
        model: PathBuf,
        data: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write one long-format file per timestep.
        #[arg(long)]
        grid: bool,
    },
    /// Hyperparameter search over the config's [search] section.
    Tune(Common),
    /// Print the reports of a training run.
    Report {
        #[arg(long, default_value = "runs/default")]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("PLUMESTACK_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("PLUMESTACK_THREADS={value:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Internal(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Generate(common) => {
            let out = cmd_generate(&load_config(&common)?)?;
            let s = &out.summary;
            println!(
                "{} rows, peak {:.3} ppm-V, floor {:.4} ppm-V, positive fraction {:.4}",
                s.stats.n_rows, s.peak_ppm, s.floor_ppm, s.positive_fraction
            );
            println!("{}", s.stats.to_text());
            println!("wrote {} and {}", out.csv.display(), out.sidecar.display());
        }
        Command::Train { common, preset, layers, task } => {
            let mut config = load_config(&common)?;
            if let Some(p) = preset {
                config.apply_preset(&p)?;
            }
            if let Some(l) = layers {
                config.apply_layers(l);
            }
            if let Some(t) = task {
                config.task = match t.as_str() {
                    "classification" => TaskSelection::Classification,
                    "regression" => TaskSelection::Regression,
                    _ => TaskSelection::Both,
                };
            }
            let out = cmd_train(&config)?;
            for t in &out.tasks {
                println!("== {} ({:.1?})", task_name(t.log.task), t.elapsed);
                println!("{}", t.log.test.to_text());
            }
            println!("wrote run to {}", config.out.display());
        }
        Command::Evaluate { model, data, out } => {
            let table = cmd_evaluate(&model, &data, out.as_deref())?;
            println!("{}", table.to_text());
        }
        Command::Predict { model, data, out, grid } => {
            let p = cmd_predict(&model, &data, &out, grid)?;
            println!("{} predictions -> {}", p.n_rows, p.predictions.display());
            for f in &p.grid_files {
                println!("  {}", f.display());
            }
        }
        Command::Tune(common) => {
            let out = cmd_tune(&load_config(&common)?)?;
            let s = &out.summary;
            let config: Vec<String> = s.best.config.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!(
                "{} trials; best {:?} {:.4} at budget {} with {}",
                s.n_trials,
                s.metric,
                s.best.objective.unwrap_or(f64::NAN),
                s.best.budget,
                config.join(", ")
            );
            println!("test {:?}: default {:.4}, tuned {:.4}", s.metric, s.default_test_score, s.tuned_test_score);
        }
        Command::Report { out } => print!("{}", cmd_report(&out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
