//! Tabular data: the [`Dataset`] table, the row-major [`FeatureMatrix`] handed
//! to learners, CSV ingestion and the preprocessing steps that turn a raw
//! scenario table into classification and regression training sets.

mod csv_io;
mod preprocess;
mod standardize;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use csv_io::{load_csv, write_csv};
pub(crate) use csv_io::write_atomic;
pub use preprocess::{
    derive_binary_label, drop_constant_columns, random_split, undersample_majority, SplitResult,
};
pub(crate) use preprocess::class_groups;
pub use standardize::{fit_standardizer, ColumnStats, Standardizer};

/// Canonical scenario columns, in file order.
pub const SCENARIO_COLUMNS: [&str; 15] = [
    "time",
    "latitude",
    "longitude",
    "temperature",
    "relative_humidity",
    "pressure",
    "water_vapor",
    "turbulent_kinetic_energy",
    "precipitation_rate",
    "sensible_heat_flux",
    "latent_heat_flux",
    "wind_u",
    "wind_v",
    "wind_w",
    "tracer_concentration",
];

/// Space-time columns carried along as metadata but never used as features.
pub const METADATA_COLUMNS: [&str; 3] = ["time", "latitude", "longitude"];

pub const TRACER_COLUMN: &str = "tracer_concentration";
pub const LEAKAGE_COLUMN: &str = "Leakage";

/// Named real-valued columns of equal length, with an optional target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    column_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    target_name: Option<String>,
}

impl Dataset {
    pub fn new(column_names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if column_names.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} names for {} columns",
                column_names.len(),
                columns.len()
            )));
        }
        for (i, name) in column_names.iter().enumerate() {
            if column_names[..i].contains(name) {
                return Err(Error::Schema(format!("duplicate column name {name:?}")));
            }
        }
        if let Some(first) = columns.first() {
            let n = first.len();
            for (name, col) in column_names.iter().zip(&columns) {
                if col.len() != n {
                    return Err(Error::Schema(format!(
                        "column {name:?} has {} rows, expected {n}",
                        col.len()
                    )));
                }
                if let Some(r) = col.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Degenerate(format!(
                        "non-finite value in column {name:?} at row {}",
                        r + 1
                    )));
                }
            }
        }
        Ok(Self {
            column_names,
            columns,
            target_name: None,
        })
    }

    pub fn with_target(mut self, name: &str) -> Result<Self> {
        self.index_of(name)?;
        self.target_name = Some(name.to_string());
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows() == 0
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target_name.as_deref()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_names.iter().any(|c| c == name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.index_of(name)?])
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.column_names
            .iter()
            .map(String::as_str)
            .zip(self.columns.iter().map(Vec::as_slice))
    }

    pub fn target(&self) -> Result<&[f64]> {
        let name = self
            .target_name
            .as_deref()
            .ok_or_else(|| Error::Schema("dataset has no target column".into()))?;
        self.column(name)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Rows `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            column_names: self.column_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
            target_name: self.target_name.clone(),
        }
    }

    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> Dataset {
        let idx: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(i)).collect();
        self.select_rows(&idx)
    }

    /// Drop the named columns; names that are absent are ignored. Dropping the
    /// target column clears the target designation.
    pub fn drop_columns(&self, names: &[&str]) -> Dataset {
        let mut out = Dataset {
            column_names: Vec::new(),
            columns: Vec::new(),
            target_name: None,
        };
        for (name, col) in self.column_names.iter().zip(&self.columns) {
            if !names.contains(&name.as_str()) {
                out.column_names.push(name.clone());
                out.columns.push(col.clone());
            }
        }
        out.target_name = self
            .target_name
            .clone()
            .filter(|t| out.column_names.contains(t));
        out
    }

    pub fn add_column(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if self.has_column(name) {
            return Err(Error::Schema(format!("duplicate column name {name:?}")));
        }
        if !self.columns.is_empty() && values.len() != self.n_rows() {
            return Err(Error::Schema(format!(
                "column {name:?} has {} rows, expected {}",
                values.len(),
                self.n_rows()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite value in column {name:?}")));
        }
        self.column_names.push(name.to_string());
        self.columns.push(values);
        Ok(self)
    }

    pub fn replace_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        let i = self.index_of(name)?;
        if values.len() != self.n_rows() {
            return Err(Error::Schema(format!("column {name:?} length mismatch")));
        }
        self.columns[i] = values;
        Ok(())
    }

    /// Row-major matrix of the named columns, in the order given.
    pub fn feature_matrix(&self, names: &[String]) -> Result<FeatureMatrix> {
        let cols: Vec<&[f64]> = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<_>>()?;
        let n = self.n_rows();
        let mut values = Vec::with_capacity(n * cols.len());
        for r in 0..n {
            values.extend(cols.iter().map(|c| c[r]));
        }
        FeatureMatrix::new(names.to_vec(), n, values)
    }

    /// Column names other than metadata, the target and `exclude`.
    pub fn feature_names(&self, exclude: &[&str]) -> Vec<String> {
        self.column_names
            .iter()
            .filter(|n| {
                !METADATA_COLUMNS.contains(&n.as_str())
                    && Some(n.as_str()) != self.target_name()
                    && !exclude.contains(&n.as_str())
            })
            .cloned()
            .collect()
    }
}

/// Dense row-major matrix of named features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    names: Vec<String>,
    n_rows: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, n_rows: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * names.len() {
            return Err(Error::Schema(format!(
                "{} values for a {n_rows}x{} matrix",
                values.len(),
                names.len()
            )));
        }
        Ok(Self {
            names,
            n_rows,
            values,
        })
    }

    /// Build from rows, naming features `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Schema("ragged rows".into()));
        }
        let names = (0..d).map(|j| format!("x{j}")).collect();
        Self::new(names, rows.len(), rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            names: self.names.clone(),
            n_rows: indices.len(),
            values,
        }
    }

    /// Append columns on the right.
    pub fn hstack(&self, extra: &[(String, Vec<f64>)]) -> Result<FeatureMatrix> {
        if let Some((name, _)) = extra.iter().find(|(_, c)| c.len() != self.n_rows) {
            return Err(Error::Schema(format!(
                "appended column {name:?} does not have {} rows",
                self.n_rows
            )));
        }
        let d = self.n_cols() + extra.len();
        let mut values = Vec::with_capacity(self.n_rows * d);
        for i in 0..self.n_rows {
            values.extend_from_slice(self.row(i));
            values.extend(extra.iter().map(|(_, c)| c[i]));
        }
        let mut names = self.names.clone();
        names.extend(extra.iter().map(|(n, _)| n.clone()));
        FeatureMatrix::new(names, self.n_rows, values)
    }
}
