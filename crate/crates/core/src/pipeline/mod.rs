//! End-to-end workflow: data preparation, training, evaluation, prediction,
//! tuning, persistence and reports.

mod artifact;
mod commands;
mod config;
mod prepare;

pub use artifact::{data_fingerprint, ModelArtifact, TrainingMetadata, ARTIFACT_MAGIC, ARTIFACT_VERSION};
pub use commands::{
    apply_config, artifact_path, cmd_evaluate, cmd_generate, cmd_predict, cmd_report, cmd_train, cmd_tune,
    load_source, prepare, task_name, test_csv_path, train_task, tuning_objective, write_report,
    EnsembleLog, EnsembleWeight, GenerateOutput, GenerateSidecar, MemberLog, PredictOutput, TaskLog,
    TrainOutput, TrainedTask, TrainingLog, TuneOutput, TuneSummary, HOLDOUT_CSV, TRAINING_LOG,
};
pub use config::{DataSource, PipelineConfig, SearchSection, TaskSelection, TaskSettings};
pub use prepare::{
    candidate_features, prepare_classification, prepare_regression, split_holdout, Prepared,
};
