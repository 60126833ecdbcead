use serde::{Deserialize, Serialize};

use crate::tabular::{Dataset, TRACER_COLUMN};
use crate::{Error, Result};

/// Five-number summary of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub n_rows: usize,
    pub columns: Vec<ColumnSummary>,
    /// Rows with positive tracer, when the tracer column is present.
    pub positive_tracer: Option<usize>,
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn scenario_stats(ds: &Dataset) -> Result<ScenarioStats> {
    if ds.is_empty() {
        return Err(Error::Degenerate("cannot summarize an empty dataset".into()));
    }
    let columns = ds
        .columns()
        .map(|(name, values)| {
            let mut v = values.to_vec();
            v.sort_by(f64::total_cmp);
            ColumnSummary {
                name: name.to_string(),
                min: v[0],
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: v[v.len() - 1],
            }
        })
        .collect();
    let positive_tracer = ds
        .column(TRACER_COLUMN)
        .ok()
        .map(|c| c.iter().filter(|&&v| v > 0.0).count());
    Ok(ScenarioStats {
        n_rows: ds.n_rows(),
        columns,
        positive_tracer,
    })
}

impl ScenarioStats {
    pub fn column(&self, name: &str) -> Option<&ColumnSummary> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let w = self.columns.iter().map(|c| c.name.len()).max().unwrap_or(6).max(6);
        let mut out = format!(
            "{:<w$}  {:>12}  {:>12}  {:>12}  {:>12}  {:>12}\n",
            "column", "min", "q1", "median", "q3", "max"
        );
        for c in &self.columns {
            out.push_str(&format!(
                "{:<w$}  {:>12.5}  {:>12.5}  {:>12.5}  {:>12.5}  {:>12.5}\n",
                c.name, c.min, c.q1, c.median, c.q3, c.max
            ));
        }
        out.push_str(&format!("rows: {}\n", self.n_rows));
        if let Some(p) = self.positive_tracer {
            out.push_str(&format!("positive tracer rows: {p}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let ds = Dataset::new(vec!["a".into(), "b".into()], vec![vec![3.0], vec![-1.0]]).unwrap();
        let s = scenario_stats(&ds).unwrap();
        for c in &s.columns {
            assert!(c.min == c.max && c.median == c.min && c.q1 == c.min && c.q3 == c.max);
        }
        assert_eq!(s.positive_tracer, None);
    }

    #[test]
    fn interpolated_quartiles() {
        let ds = Dataset::new(vec![TRACER_COLUMN.into()], vec![vec![0.0, 1.0, 2.0, 3.0, 0.0]]).unwrap();
        let s = scenario_stats(&ds).unwrap();
        let c = &s.columns[0];
        assert_eq!((c.min, c.q1, c.median, c.q3, c.max), (0.0, 0.0, 1.0, 2.0, 3.0));
        assert_eq!(s.positive_tracer, Some(3));
        assert!(s.to_text().contains("positive tracer rows: 3"));
    }

    #[test]
    fn empty_is_an_error() {
        let ds = Dataset::new(vec!["a".into()], vec![vec![]]).unwrap();
        assert!(scenario_stats(&ds).is_err());
    }
}
