use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

/// Training-set mean and population standard deviation of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
}

impl ColumnStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Degenerate("cannot standardize an empty column".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: var.sqrt(),
        })
    }

    pub fn is_constant(&self) -> bool {
        self.std == 0.0
    }

    /// `(x - mean) / std`, or 0 for a zero-variance column.
    pub fn scale(&self, x: f64) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            (x - self.mean) / self.std
        }
    }

    pub fn unscale(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    columns: Vec<(String, ColumnStats)>,
}

pub fn fit_standardizer(train: &Dataset, feature_columns: &[String]) -> Result<Standardizer> {
    if train.is_empty() {
        return Err(Error::Degenerate("cannot fit a standardizer on zero rows".into()));
    }
    let columns = feature_columns
        .iter()
        .map(|name| Ok((name.clone(), ColumnStats::of(train.column(name)?)?)))
        .collect::<Result<_>>()?;
    Ok(Standardizer { columns })
}

impl Standardizer {
    pub fn stats(&self, name: &str) -> Option<ColumnStats> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, ColumnStats)> {
        self.columns.iter().map(|(n, s)| (n.as_str(), *s))
    }

    /// Names of zero-variance columns (these scale to 0.0).
    pub fn flagged(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|(_, s)| s.is_constant())
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        self.map_columns(ds, ColumnStats::scale)
    }

    pub fn invert(&self, ds: &Dataset) -> Result<Dataset> {
        self.map_columns(ds, ColumnStats::unscale)
    }

    fn map_columns(&self, ds: &Dataset, f: fn(&ColumnStats, f64) -> f64) -> Result<Dataset> {
        let mut out = ds.clone();
        for (name, stats) in &self.columns {
            let col = ds.column(name)?.iter().map(|&x| f(stats, x)).collect();
            out.replace_column(name, col)?;
        }
        Ok(out)
    }
}
