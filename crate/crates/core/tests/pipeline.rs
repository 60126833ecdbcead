use std::fs;
use std::path::Path;

use plumestack::learners::Task;
use plumestack::metrics::ReportTable;
use plumestack::pipeline::{
    artifact_path, cmd_evaluate, cmd_generate, cmd_predict, cmd_report, cmd_train, test_csv_path,
    GenerateSidecar, ModelArtifact, PipelineConfig, TaskSelection, TrainingLog, ARTIFACT_VERSION, HOLDOUT_CSV,
};
use plumestack::plume::ScenarioConfig;
use plumestack::tabular::{load_csv, Dataset, SCENARIO_COLUMNS, TRACER_COLUMN};
use plumestack::Error;
use rand::{Rng, SeedableRng};

fn small_config(out: &Path, seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig {
        seed,
        out: out.to_path_buf(),
        scenario: Some(ScenarioConfig {
            grid_size: 25,
            cell_m: 300.0,
            n_timesteps: 13,
            step_minutes: 30.0,
            target_positive_fraction: 0.05,
            ..ScenarioConfig::default()
        }),
        holdout_times: vec![240.0, 270.0],
        ..PipelineConfig::default()
    };
    c.apply_preset("fast").unwrap();
    c
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    fs::read(p).unwrap()
}

#[test]
fn train_evaluate_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), 4);
    let out = cmd_train(&config).unwrap();
    assert_eq!(out.tasks.len(), 2);

    let log = TrainingLog::load(dir.path()).unwrap();
    assert_eq!(log.n_holdout_rows, 2 * 25 * 25);
    assert_eq!(log.master_seed, 4);
    for t in &log.tasks {
        // Re-running evaluation on the saved artifact and test file
        // reproduces the logged test metrics exactly.
        let table = cmd_evaluate(
            &artifact_path(dir.path(), t.task),
            &test_csv_path(dir.path(), t.task),
            None,
        )
        .unwrap();
        assert_eq!(table, t.test);
        assert_eq!(t.dropped_columns, vec!["precipitation_rate"]);
        let ens = t.ensembles.last().unwrap();
        let total: f64 = ens.weights.iter().map(|w| w.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    let reg = &log.tasks[1];
    assert_eq!(reg.task, Task::Regression);
    assert_eq!(reg.layer_feature_counts, vec![10, 15]);
    let reg_test = load_csv(test_csv_path(dir.path(), Task::Regression), None).unwrap();
    assert!(reg_test.column(TRACER_COLUMN).unwrap().iter().all(|&v| v > 0.0));

    // Classification predictions: labels in {0, 1}, scores in [0, 1].
    let holdout = dir.path().join(HOLDOUT_CSV);
    let pred_dir = dir.path().join("pred");
    let p = cmd_predict(&artifact_path(dir.path(), Task::Classification), &holdout, &pred_dir, true).unwrap();
    let preds = load_csv(&p.predictions, None).unwrap();
    assert_eq!(preds.n_rows(), 2 * 25 * 25);
    assert!(preds.column("predicted_label").unwrap().iter().all(|&v| v == 0.0 || v == 1.0));
    assert!(preds.column("score").unwrap().iter().all(|&v| (0.0..=1.0).contains(&v)));

    // Grid export: one file per held-out timestep, rows conserved.
    let p = cmd_predict(&artifact_path(dir.path(), Task::Regression), &holdout, &pred_dir, true).unwrap();
    assert_eq!(p.grid_files.len(), 2);
    let mut rows = 0;
    for f in &p.grid_files {
        let g = load_csv(f, None).unwrap();
        assert_eq!(g.column_names(), ["latitude", "longitude", "actual", "predicted"]);
        rows += g.n_rows();
    }
    assert_eq!(rows, p.n_rows);

    // Regression predictions are in ppm-V: the inverse transform of the
    // model-scale output.
    let model = ModelArtifact::load(artifact_path(dir.path(), Task::Regression)).unwrap();
    let ds = load_csv(&holdout, None).unwrap();
    let physical = model.predict(&ds).unwrap();
    let scaled = model.stack.predict(&model.features(&ds).unwrap()).unwrap();
    let target = model.standardizer.as_ref().unwrap().stats(TRACER_COLUMN).unwrap();
    for (a, b) in physical.iter().zip(&scaled) {
        assert_eq!(*a, target.unscale(*b));
    }
    let written = load_csv(&p.predictions, None).unwrap();
    assert_eq!(written.column("predicted_tracer").unwrap(), physical.as_slice());

    let text = cmd_report(dir.path()).unwrap();
    assert!(text.contains("WeightedEnsemble_L2") && text.contains("WeightedEnsemble_L3"));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = small_config(a.path(), 11);
    ca.task = TaskSelection::Classification;
    let mut cb = small_config(b.path(), 11);
    cb.task = TaskSelection::Classification;
    cmd_train(&ca).unwrap();
    cmd_train(&cb).unwrap();
    for name in [
        "classification.model",
        "classification_report.txt",
        "classification_report.json",
        "classification_test.csv",
        "training_log.json",
        "holdout.csv",
    ] {
        assert_eq!(read(a.path().join(name)), read(b.path().join(name)), "{name}");
    }
    let mut cc = small_config(b.path(), 12);
    cc.task = TaskSelection::Classification;
    cmd_train(&cc).unwrap();
    assert_ne!(read(a.path().join("classification.model")), read(b.path().join("classification.model")));
}

#[test]
fn artifact_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path(), 2);
    config.task = TaskSelection::Regression;
    let out = cmd_train(&config).unwrap();
    let model = &out.tasks[0].artifact;
    let loaded = ModelArtifact::load(artifact_path(dir.path(), Task::Regression)).unwrap();
    assert_eq!(&loaded, model);
    assert_eq!(loaded.metadata.master_seed, 2);
    assert_eq!(loaded.metadata.data_fingerprint.len(), 64);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let columns: Vec<Vec<f64>> = model
        .feature_names
        .iter()
        .map(|_| (0..1000).map(|_| rng.gen_range(-50.0..1100.0)).collect())
        .collect();
    let ds = Dataset::new(model.feature_names.clone(), columns).unwrap();
    let a = model.predict(&ds).unwrap();
    let b = loaded.predict(&ds).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn corrupt_artifacts_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path(), 3);
    config.task = TaskSelection::Classification;
    cmd_train(&config).unwrap();
    let bytes = read(artifact_path(dir.path(), Task::Classification));

    let truncated = &bytes[..bytes.len() - 100];
    assert!(matches!(ModelArtifact::from_bytes(truncated), Err(Error::Artifact(_))));
    let mut flipped = bytes.clone();
    let last = flipped.len() - 1;
    flipped[last] ^= 1;
    let err = ModelArtifact::from_bytes(&flipped).unwrap_err().to_string();
    assert!(err.contains("checksum"), "{err}");
    let mut versioned = bytes.clone();
    versioned[8..12].copy_from_slice(&(ARTIFACT_VERSION + 1).to_le_bytes());
    let err = ModelArtifact::from_bytes(&versioned).unwrap_err().to_string();
    assert!(err.contains("version"), "{err}");
    assert!(ModelArtifact::from_bytes(b"not a model").is_err());
}

#[test]
fn evaluate_rejects_missing_features() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path(), 3);
    config.task = TaskSelection::Classification;
    cmd_train(&config).unwrap();
    let test = load_csv(test_csv_path(dir.path(), Task::Classification), None).unwrap();
    let broken = dir.path().join("broken.csv");
    plumestack::tabular::write_csv(&broken, &test.drop_columns(&["pressure"])).unwrap();
    let err = cmd_evaluate(&artifact_path(dir.path(), Task::Classification), &broken, None).unwrap_err();
    assert!(matches!(err, Error::Schema(_)), "{err}");
}

#[test]
fn generate_writes_canonical_csv_and_sidecar() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = PipelineConfig { out: a.path().to_path_buf(), ..PipelineConfig::default() };
    let out = cmd_generate(&config).unwrap();
    cmd_generate(&PipelineConfig { out: b.path().to_path_buf(), ..config }).unwrap();
    assert_eq!(read(&out.csv), read(b.path().join("scenario.csv")));

    let header = fs::read_to_string(&out.csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, SCENARIO_COLUMNS.join(","));
    assert_eq!(SCENARIO_COLUMNS.len(), 15);

    let sidecar: GenerateSidecar = serde_json::from_str(&fs::read_to_string(&out.sidecar).unwrap()).unwrap();
    let tracer = sidecar.stats.columns.iter().find(|c| c.name == TRACER_COLUMN).unwrap();
    assert!((0.2..=2.0).contains(&tracer.max), "{}", tracer.max);
    assert_eq!(sidecar.stats.n_rows, 226_981);
}

#[test]
fn report_tables_use_table_column_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path(), 1);
    config.task = TaskSelection::Classification;
    let out = cmd_train(&config).unwrap();
    let table = &out.tasks[0].log.test;
    assert!(matches!(table, ReportTable::Classification(_)));
    assert_eq!(table.headers(), ["Model", "Accuracy (%)", "F1-Score", "AUC_ROC", "Precision", "Recall", "MCC"]);
    let csv = fs::read_to_string(dir.path().join("classification_report.csv")).unwrap();
    assert!(csv.lines().count() == table.len() + 1);
}
