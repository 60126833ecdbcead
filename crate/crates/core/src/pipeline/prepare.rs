//! The preprocessing pass shared by both tasks.

use crate::learners::Task;
use crate::tabular::{
    derive_binary_label, drop_constant_columns, fit_standardizer, random_split,
    undersample_majority, ColumnStats, Dataset, FeatureMatrix, SplitResult, Standardizer,
    LEAKAGE_COLUMN, TRACER_COLUMN,
};
use crate::{Error, Result};

/// Model-ready train/test data for one task.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub task: Task,
    pub feature_names: Vec<String>,
    pub dropped_columns: Vec<String>,
    /// Rows entering the task-specific steps.
    pub n_input_rows: usize,
    pub n_positive: usize,
    /// Balanced rows (classification) or positive-tracer rows (regression).
    pub n_task_rows: usize,
    /// Train/test rows in physical units, metadata included.
    pub split: SplitResult,
    pub x_train: FeatureMatrix,
    pub y_train: Vec<f64>,
    pub x_test: FeatureMatrix,
    pub y_test: Vec<f64>,
    /// Feature and target scaling (regression only).
    pub standardizer: Option<Standardizer>,
}

impl Prepared {
    pub fn target_stats(&self) -> Option<ColumnStats> {
        self.standardizer.as_ref().and_then(|s| s.stats(TRACER_COLUMN))
    }
}

/// Split off whole timesteps whose `time` value is in `times`. Returns
/// `(remaining, held_out)`.
pub fn split_holdout(ds: &Dataset, times: &[f64]) -> Result<(Dataset, Dataset)> {
    if times.is_empty() {
        return Ok((ds.clone(), ds.select_rows(&[])));
    }
    let time = ds.column("time")?;
    let held = |i: usize| times.contains(&time[i]);
    let remaining = ds.filter_rows(|i| !held(i));
    let holdout = ds.filter_rows(held);
    if holdout.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "none of the holdout times {times:?} occur in the data"
        )));
    }
    Ok((remaining, holdout))
}

/// Meteorological feature candidates: everything except metadata, tracer
/// and label.
pub fn candidate_features(ds: &Dataset) -> Vec<String> {
    ds.feature_names(&[TRACER_COLUMN, LEAKAGE_COLUMN])
}

fn pruned(ds: &Dataset) -> Result<(Dataset, Vec<String>, Vec<String>)> {
    let (ds, dropped) = drop_constant_columns(ds, &candidate_features(ds))?;
    let features = candidate_features(&ds);
    if features.is_empty() {
        return Err(Error::Degenerate("no non-constant feature columns".into()));
    }
    Ok((ds, dropped, features))
}

/// Label rows by positive tracer, balance the classes by undersampling the
/// majority, and split. Features stay in physical units.
pub fn prepare_classification(
    ds: &Dataset,
    seed: u64,
    train_fraction: f64,
    stratify: bool,
) -> Result<Prepared> {
    let (ds, dropped, features) = pruned(ds)?;
    let labeled = derive_binary_label(&ds, TRACER_COLUMN, LEAKAGE_COLUMN)?;
    let n_positive = labeled.column(LEAKAGE_COLUMN)?.iter().filter(|&&v| v == 1.0).count();
    let balanced = undersample_majority(&labeled, LEAKAGE_COLUMN, seed)?;
    let split = random_split(&balanced, train_fraction, seed, stratify.then_some(LEAKAGE_COLUMN))?;
    Ok(Prepared {
        task: Task::Classification,
        n_input_rows: ds.n_rows(),
        n_positive,
        n_task_rows: balanced.n_rows(),
        x_train: split.train.feature_matrix(&features)?,
        y_train: split.train.column(LEAKAGE_COLUMN)?.to_vec(),
        x_test: split.test.feature_matrix(&features)?,
        y_test: split.test.column(LEAKAGE_COLUMN)?.to_vec(),
        feature_names: features,
        dropped_columns: dropped,
        split,
        standardizer: None,
    })
}

/// Keep positive-tracer rows, split, and standardize features and target
/// with training statistics.
pub fn prepare_regression(ds: &Dataset, seed: u64, train_fraction: f64) -> Result<Prepared> {
    let (ds, dropped, features) = pruned(ds)?;
    let tracer = ds.column(TRACER_COLUMN)?;
    let positive = ds.filter_rows(|i| tracer[i] > 0.0);
    if positive.n_rows() < 2 {
        return Err(Error::Degenerate(format!(
            "{} rows with positive tracer; regression needs at least 2",
            positive.n_rows()
        )));
    }
    let split = random_split(&positive, train_fraction, seed, None)?;
    let mut scaled_columns = features.clone();
    scaled_columns.push(TRACER_COLUMN.to_string());
    let standardizer = fit_standardizer(&split.train, &scaled_columns)?;
    let train = standardizer.apply(&split.train)?;
    let test = standardizer.apply(&split.test)?;
    Ok(Prepared {
        task: Task::Regression,
        n_input_rows: ds.n_rows(),
        n_positive: positive.n_rows(),
        n_task_rows: positive.n_rows(),
        x_train: train.feature_matrix(&features)?,
        y_train: train.column(TRACER_COLUMN)?.to_vec(),
        x_test: test.feature_matrix(&features)?,
        y_test: test.column(TRACER_COLUMN)?.to_vec(),
        feature_names: features,
        dropped_columns: dropped,
        split,
        standardizer: Some(standardizer),
    })
}
