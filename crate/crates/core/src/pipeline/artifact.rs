//! Trained-model container and its on-disk format.
//!
//! Layout: 8-byte magic `PLUMESTK`, format version (u32 LE), payload length
//! (u64 LE), SHA-256 of the payload (32 bytes), then the bincode payload.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::{NamedPrediction, StackedEnsemble};
use crate::learners::Task;
use crate::metrics::{
    evaluate_classification, regression_metrics, ClassificationRow, RegressionRow, ReportTable,
};
use crate::tabular::{write_atomic, Dataset, FeatureMatrix, Standardizer, LEAKAGE_COLUMN, TRACER_COLUMN};
use crate::{Error, Result};

pub const ARTIFACT_MAGIC: [u8; 8] = *b"PLUMESTK";
pub const ARTIFACT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub master_seed: u64,
    /// SHA-256 over the column names and values of the full input table.
    pub data_fingerprint: String,
    pub data_source: String,
    pub preset: Option<String>,
    pub train_fraction: f64,
    pub holdout_times: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub crate_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub task: Task,
    /// Model inputs, in order.
    pub feature_names: Vec<String>,
    pub dropped_columns: Vec<String>,
    /// Feature and target scaling (regression).
    pub standardizer: Option<Standardizer>,
    pub stack: StackedEnsemble,
    /// Out-of-fold selection metric of every member and ensemble.
    pub validation: Vec<(String, f64)>,
    pub metadata: TrainingMetadata,
}

/// SHA-256 (hex) of a table's column names and the bit patterns of its values.
pub fn data_fingerprint(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    for (name, values) in ds.columns() {
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        for v in values {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

impl ModelArtifact {
    /// Model inputs for `ds`, scaled as in training.
    pub fn features(&self, ds: &Dataset) -> Result<FeatureMatrix> {
        let missing: Vec<&str> = self
            .feature_names
            .iter()
            .filter(|n| !ds.has_column(n))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Schema(format!("input lacks model feature columns {missing:?}")));
        }
        let x = ds.feature_matrix(&self.feature_names)?;
        let Some(std) = &self.standardizer else {
            return Ok(x);
        };
        let stats: Vec<_> = self
            .feature_names
            .iter()
            .map(|n| std.stats(n).ok_or_else(|| Error::Artifact(format!("no scaling for {n:?}"))))
            .collect::<Result<_>>()?;
        let d = stats.len();
        let values = x.values().iter().enumerate().map(|(k, &v)| stats[k % d].scale(v)).collect();
        FeatureMatrix::new(self.feature_names.clone(), x.n_rows(), values)
    }

    /// Every member's and ensemble's output on `ds`, on the model scale
    /// (probabilities, or standardized concentration).
    pub fn predict_all(&self, ds: &Dataset) -> Result<Vec<NamedPrediction>> {
        self.stack.predict_all(&self.features(ds)?)
    }

    /// Final ensemble output: leak probability, or concentration in ppm-V.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let raw = self.stack.predict(&self.features(ds)?)?;
        Ok(match self.target_stats()? {
            Some(t) => raw.into_iter().map(|v| t.unscale(v)).collect(),
            None => raw,
        })
    }

    fn target_stats(&self) -> Result<Option<crate::tabular::ColumnStats>> {
        match (&self.task, &self.standardizer) {
            (Task::Regression, Some(s)) => s
                .stats(TRACER_COLUMN)
                .map(Some)
                .ok_or_else(|| Error::Artifact("regression model without target scaling".into())),
            _ => Ok(None),
        }
    }

    /// Ground truth of `ds` on the model scale: the leak label (from the
    /// label column, else from positive tracer), or standardized tracer.
    pub fn target(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match self.task {
            Task::Classification if ds.has_column(LEAKAGE_COLUMN) => Ok(ds.column(LEAKAGE_COLUMN)?.to_vec()),
            Task::Classification => Ok(tracer(ds)?.iter().map(|&v| f64::from(u8::from(v > 0.0))).collect()),
            Task::Regression => {
                let t = self.target_stats()?.expect("regression");
                Ok(tracer(ds)?.iter().map(|&v| t.scale(v)).collect())
            }
        }
    }

    /// Rows this model is scored on: all rows for classification, rows with
    /// positive tracer for regression.
    pub fn scoring_rows(&self, ds: &Dataset) -> Result<Dataset> {
        match self.task {
            Task::Classification => Ok(ds.clone()),
            Task::Regression => {
                let t = tracer(ds)?;
                Ok(ds.filter_rows(|i| t[i] > 0.0))
            }
        }
    }

    /// Per-member and ensemble test metrics, sorted by the headline metric.
    pub fn evaluate(&self, ds: &Dataset) -> Result<ReportTable> {
        let ds = self.scoring_rows(ds)?;
        if ds.is_empty() {
            return Err(Error::Degenerate("no rows to evaluate".into()));
        }
        let y = self.target(&ds)?;
        let predictions = self.predict_all(&ds)?;
        let table = match self.task {
            Task::Classification => ReportTable::Classification(
                predictions
                    .iter()
                    .map(|p| {
                        Ok(ClassificationRow {
                            model: p.name.clone(),
                            report: evaluate_classification(&y, &p.values)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
            Task::Regression => ReportTable::Regression(
                predictions
                    .iter()
                    .map(|p| {
                        Ok(RegressionRow {
                            model: p.name.clone(),
                            test: regression_metrics(&y, &p.values)?,
                            validation_r2: self.validation_score(&p.name),
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(table.sorted())
    }

    pub fn validation_score(&self, name: &str) -> Option<f64> {
        self.validation.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload = bincode::serialize(self).map_err(|e| Error::Internal(format!("encoding model: {e}")))?;
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(&ARTIFACT_MAGIC);
        out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&Sha256::digest(&payload));
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Err(Error::Artifact(m));
        if bytes.len() < HEADER_LEN || bytes[..8] != ARTIFACT_MAGIC {
            return bad("not a model artifact".into());
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != ARTIFACT_VERSION {
            return bad(format!("unsupported artifact version {version} (expected {ARTIFACT_VERSION})"));
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let payload = &bytes[HEADER_LEN..];
        if payload.len() as u64 != len {
            return bad(format!("payload is {} bytes, header says {len}; file truncated?", payload.len()));
        }
        if Sha256::digest(payload).as_slice() != &bytes[20..52] {
            return bad("checksum mismatch".into());
        }
        bincode::deserialize(payload).map_err(|e| Error::Artifact(format!("decoding model: {e}")))
    }

    /// Write atomically (temp file, then rename).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn tracer(ds: &Dataset) -> Result<&[f64]> {
    ds.column(TRACER_COLUMN)
        .map_err(|_| Error::Schema(format!("input has no {TRACER_COLUMN:?} column to score against")))
}
