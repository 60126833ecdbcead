use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::artifact::{data_fingerprint, ModelArtifact, TrainingMetadata};
use super::config::{DataSource, PipelineConfig, SearchSection};
use super::prepare::{prepare_classification, prepare_regression, split_holdout, Prepared};
use crate::ensemble::{fit_stack, kfold_assign, SelectionMetric};
use crate::learners::{fit, Family, Hyperparameters, ModelSpec, Task};
use crate::metrics::ReportTable;
use crate::plume::{generate, scenario_stats, ScenarioConfig, ScenarioStats};
use crate::tabular::{
    load_csv, write_atomic, write_csv, Dataset, FeatureMatrix, METADATA_COLUMNS, TRACER_COLUMN,
};
use crate::tuning::{run_search, Config, ParamValue, SearchResult, Trial};
use crate::{rng, Error, Result};

pub const TRAINING_LOG: &str = "training_log.json";
pub const HOLDOUT_CSV: &str = "holdout.csv";

pub fn task_name(task: Task) -> &'static str {
    match task {
        Task::Classification => "classification",
        Task::Regression => "regression",
    }
}

pub fn artifact_path(out: &Path, task: Task) -> PathBuf {
    out.join(format!("{}.model", task_name(task)))
}

pub fn test_csv_path(out: &Path, task: Task) -> PathBuf {
    out.join(format!("{}_test.csv", task_name(task)))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializes to json");
    s.push('\n');
    s
}

/// Write `<stem>.txt`, `<stem>.csv` and `<stem>.json` renderings of a report.
pub fn write_report(out: &Path, stem: &str, table: &ReportTable) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (ext, body) in [("txt", table.to_text()), ("csv", table.to_csv()), ("json", table.to_json())] {
        let p = out.join(format!("{stem}.{ext}"));
        write_text(&p, &body)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Rows for the configured source and a short description of it.
pub fn load_source(config: &PipelineConfig) -> Result<(Dataset, String)> {
    match config.source() {
        DataSource::Csv(path) => {
            let ds = load_csv(&path, None)?;
            Ok((ds, path.display().to_string()))
        }
        DataSource::Scenario(s) => {
            let ds = generate(&s)?.dataset;
            Ok((ds, format!("generated scenario (seed {})", s.seed)))
        }
    }
}

// ---------------------------------------------------------------- generate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSidecar {
    pub config: ScenarioConfig,
    pub floor_ppm: f64,
    pub peak_ppm: f64,
    pub positive_fraction: f64,
    pub stats: ScenarioStats,
}

#[derive(Debug, Clone)]
pub struct GenerateOutput {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub summary: GenerateSidecar,
}

/// Generate the configured scenario into `<out>/scenario.csv` with a
/// `<out>/scenario_stats.json` sidecar.
pub fn cmd_generate(config: &PipelineConfig) -> Result<GenerateOutput> {
    let DataSource::Scenario(scenario) = config.source() else {
        return Err(Error::InvalidArgument("generate needs a [scenario], not a data file".into()));
    };
    let generated = generate(&scenario)?;
    let summary = GenerateSidecar {
        stats: scenario_stats(&generated.dataset)?,
        config: scenario,
        floor_ppm: generated.floor_ppm,
        peak_ppm: generated.peak_ppm,
        positive_fraction: generated.positive_fraction,
    };
    let csv = config.out.join("scenario.csv");
    let sidecar = config.out.join("scenario_stats.json");
    write_csv(&csv, &generated.dataset)?;
    write_text(&sidecar, &to_json(&summary))?;
    Ok(GenerateOutput { csv, sidecar, summary })
}

// ------------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberLog {
    pub name: String,
    pub layer: usize,
    pub family: Option<Family>,
    /// Out-of-fold selection metric (accuracy or R²).
    pub validation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeight {
    pub member: String,
    pub count: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleLog {
    pub name: String,
    pub ensemble_size: usize,
    pub metric: SelectionMetric,
    pub score: f64,
    pub weights: Vec<EnsembleWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskLog {
    pub task: Task,
    pub preset: Option<String>,
    pub features: Vec<String>,
    pub dropped_columns: Vec<String>,
    pub n_input_rows: usize,
    pub n_positive: usize,
    pub n_task_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub layer_feature_counts: Vec<usize>,
    pub members: Vec<MemberLog>,
    pub ensembles: Vec<EnsembleLog>,
    pub test: ReportTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub master_seed: u64,
    pub data_source: String,
    pub data_fingerprint: String,
    pub n_rows: usize,
    pub holdout_times: Vec<f64>,
    pub n_holdout_rows: usize,
    pub tasks: Vec<TaskLog>,
}

impl TrainingLog {
    pub fn load(out: &Path) -> Result<Self> {
        let path = out.join(TRAINING_LOG);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedTask {
    pub artifact: ModelArtifact,
    pub log: TaskLog,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub log: TrainingLog,
    pub tasks: Vec<TrainedTask>,
}

/// Fit one task's stack on prepared data and score it on the test split.
pub fn train_task(
    data: &Prepared,
    config: &PipelineConfig,
    fingerprint: &str,
    source: &str,
) -> Result<TrainedTask> {
    let task = data.task;
    let stack_config = config.stack_for(task)?;
    let started = Instant::now();
    let stack = fit_stack(&data.x_train, &data.y_train, &stack_config, config.seed)?;
    let elapsed = started.elapsed();

    let metric = stack_config.metric();
    let mut members = Vec::new();
    let mut validation = Vec::new();
    for p in stack.validation_predictions()? {
        let score = metric.evaluate(&data.y_train, &p.values)?;
        validation.push((p.name.clone(), score));
        if p.family.is_some() {
            members.push(MemberLog { name: p.name, layer: p.layer, family: p.family, validation: score });
        }
    }
    let ensembles = stack
        .ensembles
        .iter()
        .map(|e| EnsembleLog {
            name: e.name.clone(),
            ensemble_size: e.ensemble_size,
            metric: e.metric,
            score: e.score,
            weights: e
                .members
                .iter()
                .zip(&e.counts)
                .zip(&e.weights)
                .map(|((m, &count), &weight)| EnsembleWeight { member: m.clone(), count, weight })
                .collect(),
        })
        .collect();

    let preset = config.task_settings(task).preset.clone();
    let artifact = ModelArtifact {
        task,
        feature_names: data.feature_names.clone(),
        dropped_columns: data.dropped_columns.clone(),
        standardizer: data.standardizer.clone(),
        validation,
        metadata: TrainingMetadata {
            master_seed: config.seed,
            data_fingerprint: fingerprint.to_string(),
            data_source: source.to_string(),
            preset: preset.clone(),
            train_fraction: config.train_fraction,
            holdout_times: config.holdout_times.clone(),
            n_train: data.x_train.n_rows(),
            n_test: data.x_test.n_rows(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        stack,
    };
    let test = artifact.evaluate(&data.split.test)?;
    let log = TaskLog {
        task,
        preset,
        features: data.feature_names.clone(),
        dropped_columns: data.dropped_columns.clone(),
        n_input_rows: data.n_input_rows,
        n_positive: data.n_positive,
        n_task_rows: data.n_task_rows,
        n_train: data.x_train.n_rows(),
        n_test: data.x_test.n_rows(),
        layer_feature_counts: artifact.stack.layer_feature_counts(),
        members,
        ensembles,
        test,
    };
    Ok(TrainedTask { artifact, log, elapsed })
}

pub fn prepare(task: Task, ds: &Dataset, config: &PipelineConfig) -> Result<Prepared> {
    match task {
        Task::Classification => prepare_classification(ds, config.seed, config.train_fraction, config.stratify),
        Task::Regression => prepare_regression(ds, config.seed, config.train_fraction),
    }
}

/// Withhold the configured timesteps, then prepare, fit and score every
/// configured task. Writes one artifact, test CSV and report per task, the
/// held-out rows, the resolved config and `training_log.json` under `out`.
pub fn cmd_train(config: &PipelineConfig) -> Result<TrainOutput> {
    config.validate()?;
    let (ds, source) = load_source(config)?;
    let fingerprint = data_fingerprint(&ds);
    let (pool, holdout) = split_holdout(&ds, &config.holdout_times)?;
    let out = &config.out;
    if !holdout.is_empty() {
        write_csv(out.join(HOLDOUT_CSV), &holdout)?;
    }
    write_text(&out.join("config.toml"), &config.to_toml())?;

    let mut tasks = Vec::new();
    for task in config.task.tasks() {
        let data = prepare(task, &pool, config)?;
        let trained = train_task(&data, config, &fingerprint, &source)?;
        trained.artifact.save(artifact_path(out, task))?;
        write_csv(test_csv_path(out, task), &data.split.test)?;
        write_report(out, &format!("{}_report", task_name(task)), &trained.log.test)?;
        tasks.push(trained);
    }
    let log = TrainingLog {
        master_seed: config.seed,
        data_source: source,
        data_fingerprint: fingerprint,
        n_rows: ds.n_rows(),
        holdout_times: config.holdout_times.clone(),
        n_holdout_rows: holdout.n_rows(),
        tasks: tasks.iter().map(|t| t.log.clone()).collect(),
    };
    write_text(&out.join(TRAINING_LOG), &to_json(&log))?;
    Ok(TrainOutput { log, tasks })
}

// ---------------------------------------------------------------- evaluate

/// Score a saved model on a CSV; writes `<out>/<task>_evaluation.*` when
/// `out` is given.
pub fn cmd_evaluate(artifact: &Path, data: &Path, out: Option<&Path>) -> Result<ReportTable> {
    let model = ModelArtifact::load(artifact)?;
    let ds = load_csv(data, None)?;
    let table = model.evaluate(&ds)?;
    if let Some(out) = out {
        write_report(out, &format!("{}_evaluation", task_name(model.task)), &table)?;
    }
    Ok(table)
}

// ----------------------------------------------------------------- predict

#[derive(Debug, Clone)]
pub struct PredictOutput {
    pub task: Task,
    pub n_rows: usize,
    pub predictions: PathBuf,
    /// Per-timestep grid files, in time order.
    pub grid_files: Vec<PathBuf>,
}

/// Ground truth in the units of the prediction column, when the input has it.
fn actual_values(model: &ModelArtifact, ds: &Dataset) -> Option<Vec<f64>> {
    match model.task {
        Task::Classification => model.target(ds).ok(),
        Task::Regression => ds.column(TRACER_COLUMN).ok().map(<[f64]>::to_vec),
    }
}

fn fmt_row(out: &mut String, values: &[f64]) {
    let cells: Vec<String> = values.iter().map(f64::to_string).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// Predict every row of `data` into `<out>/predictions.csv`: metadata
/// columns, then `predicted_label` and `score` (classification) or
/// `predicted_tracer` in ppm-V (regression). With `grid`, also one
/// long-format file per timestep under `<out>/grid/` with latitude,
/// longitude, actual (when known) and predicted.
pub fn cmd_predict(artifact: &Path, data: &Path, out: &Path, grid: bool) -> Result<PredictOutput> {
    let model = ModelArtifact::load(artifact)?;
    let ds = load_csv(data, None)?;
    let predicted = model.predict(&ds)?;
    let meta: Vec<&str> = METADATA_COLUMNS.into_iter().filter(|c| ds.has_column(c)).collect();
    let meta_cols: Vec<&[f64]> = meta.iter().map(|c| ds.column(c)).collect::<Result<_>>()?;

    let mut header: Vec<&str> = meta.clone();
    match model.task {
        Task::Classification => header.extend(["predicted_label", "score"]),
        Task::Regression => header.push("predicted_tracer"),
    }
    let mut text = header.join(",") + "\n";
    for (i, &p) in predicted.iter().enumerate() {
        let mut row: Vec<f64> = meta_cols.iter().map(|c| c[i]).collect();
        match model.task {
            Task::Classification => row.extend([f64::from(u8::from(p >= 0.5)), p]),
            Task::Regression => row.push(p),
        }
        fmt_row(&mut text, &row);
    }
    let predictions = out.join("predictions.csv");
    write_text(&predictions, &text)?;

    let mut grid_files = Vec::new();
    if grid {
        let time = ds.column("time")?;
        let lat = ds.column("latitude")?;
        let lon = ds.column("longitude")?;
        let actual = actual_values(&model, &ds);
        let mut times: Vec<f64> = time.to_vec();
        times.sort_by(f64::total_cmp);
        times.dedup();
        for t in times {
            let mut header = vec!["latitude", "longitude"];
            if actual.is_some() {
                header.push("actual");
            }
            header.push("predicted");
            if model.task == Task::Classification {
                header.push("score");
            }
            let mut body = header.join(",") + "\n";
            for i in (0..ds.n_rows()).filter(|&i| time[i] == t) {
                let mut row = vec![lat[i], lon[i]];
                if let Some(a) = &actual {
                    row.push(a[i]);
                }
                match model.task {
                    Task::Classification => row.extend([f64::from(u8::from(predicted[i] >= 0.5)), predicted[i]]),
                    Task::Regression => row.push(predicted[i]),
                }
                fmt_row(&mut body, &row);
            }
            let path = out.join("grid").join(format!("{}_t{t}.csv", task_name(model.task)));
            write_text(&path, &body)?;
            grid_files.push(path);
        }
    }
    Ok(PredictOutput { task: model.task, n_rows: ds.n_rows(), predictions, grid_files })
}

// -------------------------------------------------------------------- tune

/// Hyperparameters with searched values laid over `base`.
pub fn apply_config(base: &Hyperparameters, config: &Config) -> Result<Hyperparameters> {
    let mut value = serde_json::to_value(base).expect("hyperparameters serialize");
    let map = value.as_object_mut().expect("hyperparameters are a map");
    for (name, v) in config {
        let v = match v {
            ParamValue::Integer(i) => serde_json::Value::from(*i),
            ParamValue::Real(x) => serde_json::Value::from(*x),
            ParamValue::Categorical(s) => serde_json::Value::from(s.as_str()),
        };
        map.insert(name.clone(), v);
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("search space: {e}")))
}

/// One tuning objective evaluation: fit on `fit_rows` with the budget
/// applied on the family's fidelity axis and score on `valid_rows`.
pub fn tuning_objective(
    search: &SearchSection,
    x: &FeatureMatrix,
    y: &[f64],
    fit_rows: &[usize],
    valid_rows: &[usize],
    config: &Config,
    budget: f64,
    seed: u64,
) -> Result<f64> {
    let mut h = apply_config(&search.base, config)?;
    let units = (budget.round() as usize).max(1);
    let mut rows = fit_rows.to_vec();
    match search.family {
        Family::Gbm => h.num_boost_round = Some(units),
        Family::RandomForest | Family::ExtraTrees => h.n_estimators = Some(units),
        Family::Tree | Family::Knn => {
            let frac = (budget / search.settings.max_budget).clamp(0.0, 1.0);
            rows.truncate(((frac * rows.len() as f64).ceil() as usize).max(1));
        }
    }
    let spec = ModelSpec { family: search.family, task: search.task, hyperparameters: h, seed };
    let xs = x.select_rows(&rows);
    let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let model = fit(&xs, &ys, &spec)?;
    let pred = model.predict(&x.select_rows(valid_rows))?;
    let yv: Vec<f64> = valid_rows.iter().map(|&i| y[i]).collect();
    SelectionMetric::for_task(search.task).evaluate(&yv, &pred)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSummary {
    pub family: Family,
    pub task: Task,
    pub metric: SelectionMetric,
    pub best: Trial,
    pub tuned_hyperparameters: Hyperparameters,
    /// Held-out test score of the base hyperparameters at full budget.
    pub default_test_score: f64,
    /// Held-out test score of the best configuration at full budget.
    pub tuned_test_score: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone)]
pub struct TuneOutput {
    pub summary: TuneSummary,
    pub result: SearchResult,
}

/// Search the `[search]` space for one learner. The prepared training split
/// is divided 4:1 into fit and validation rows for the search; the winner
/// and the base configuration are then refit on all training rows at full
/// budget and scored on the test split. Writes `tuning_history.csv` and
/// `tuning_result.json` under `out`.
pub fn cmd_tune(config: &PipelineConfig) -> Result<TuneOutput> {
    config.validate()?;
    let search = config
        .search
        .clone()
        .ok_or_else(|| Error::Config("tune needs a [search] section".into()))?;
    let (ds, _) = load_source(config)?;
    let (pool, _) = split_holdout(&ds, &config.holdout_times)?;
    let data = prepare(search.task, &pool, config)?;

    let strata = (search.task == Task::Classification).then_some(data.y_train.as_slice());
    let folds = kfold_assign(data.y_train.len(), 5, rng::substream(config.seed, "tune"), strata)?;
    let mut fit_rows = folds.train_rows(0);
    let valid_rows = folds.held_out_rows(0);
    // Budget-limited fits take a prefix of a shuffled row order.
    let mut order_rng = rng::stage_rng(config.seed, "tune-order");
    rand::seq::SliceRandom::shuffle(fit_rows.as_mut_slice(), &mut order_rng);
    let model_seed = rng::substream(config.seed, "tune-model");

    let mut settings = search.settings.clone();
    settings.seed = config.seed;
    let result = run_search(
        &search.space,
        |c, b| tuning_objective(&search, &data.x_train, &data.y_train, &fit_rows, &valid_rows, c, b, model_seed),
        &settings,
    )?;

    let full = |h: Hyperparameters| -> Result<f64> {
        let mut h = h;
        let units = settings.max_budget.round() as usize;
        match search.family {
            Family::Gbm => h.num_boost_round = Some(units),
            Family::RandomForest | Family::ExtraTrees => h.n_estimators = Some(units),
            Family::Tree | Family::Knn => {}
        }
        let spec = ModelSpec { family: search.family, task: search.task, hyperparameters: h, seed: model_seed };
        let model = fit(&data.x_train, &data.y_train, &spec)?;
        SelectionMetric::for_task(search.task).evaluate(&data.y_test, &model.predict(&data.x_test)?)
    };
    let tuned = apply_config(&search.base, &result.best.config)?;
    let summary = TuneSummary {
        family: search.family,
        task: search.task,
        metric: SelectionMetric::for_task(search.task),
        best: result.best.clone(),
        default_test_score: full(search.base.clone())?,
        tuned_test_score: full(tuned.clone())?,
        tuned_hyperparameters: tuned,
        n_trials: result.history.len(),
    };
    write_text(&config.out.join("tuning_history.csv"), &result.history_csv(&search.space)?)?;
    write_text(&config.out.join("tuning_result.json"), &to_json(&summary))?;
    Ok(TuneOutput { summary, result })
}

// ------------------------------------------------------------------ report

/// Re-render the reports of a training run: test metrics per task plus the
/// ensemble weight tables. Returns the text; also writes `<out>/report.txt`.
pub fn cmd_report(out: &Path) -> Result<String> {
    let log = TrainingLog::load(out)?;
    let mut text = format!(
        "master seed {}, {} rows from {} (fingerprint {}), {} held-out rows\n",
        log.master_seed,
        log.n_rows,
        log.data_source,
        &log.data_fingerprint[..12.min(log.data_fingerprint.len())],
        log.n_holdout_rows
    );
    for t in &log.tasks {
        text.push_str(&format!(
            "\n== {} ({}) ==\n{} train / {} test rows; features: {}\n",
            task_name(t.task),
            t.preset.as_deref().unwrap_or("custom stack"),
            t.n_train,
            t.n_test,
            t.features.join(", ")
        ));
        if !t.dropped_columns.is_empty() {
            text.push_str(&format!("dropped constant columns: {}\n", t.dropped_columns.join(", ")));
        }
        text.push('\n');
        text.push_str(&t.test.clone().sorted().to_text());
        for e in &t.ensembles {
            text.push_str(&format!(
                "\n{} (ensemble size {}, validation {:?} {:.4})\n",
                e.name, e.ensemble_size, e.metric, e.score
            ));
            for w in &e.weights {
                text.push_str(&format!("  {:<24} {:>3}  {:.3}\n", w.member, w.count, w.weight));
            }
        }
    }
    write_text(&out.join("report.txt"), &text)?;
    Ok(text)
}
