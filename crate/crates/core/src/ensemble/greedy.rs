use serde::{Deserialize, Serialize};

use crate::learners::Task;
use crate::metrics::regression_metrics;
use crate::{Error, Result};

/// Metric optimized by ensemble selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Fraction of scores on the right side of 0.5.
    Accuracy,
    R2,
    MeanSquaredError,
}

impl SelectionMetric {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Classification => SelectionMetric::Accuracy,
            Task::Regression => SelectionMetric::R2,
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, SelectionMetric::MeanSquaredError)
    }

    pub fn evaluate(self, y: &[f64], pred: &[f64]) -> Result<f64> {
        if y.len() != pred.len() || y.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} targets vs {} predictions",
                y.len(),
                pred.len()
            )));
        }
        match self {
            SelectionMetric::Accuracy => {
                let hits = y.iter().zip(pred).filter(|(&t, &p)| (p >= 0.5) == (t == 1.0)).count();
                Ok(hits as f64 / y.len() as f64)
            }
            SelectionMetric::R2 => Ok(regression_metrics(y, pred)?.r2),
            SelectionMetric::MeanSquaredError => {
                Ok(y.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum::<f64>() / y.len() as f64)
            }
        }
    }

    /// The metric oriented so that larger is better.
    fn utility(self, y: &[f64], pred: &[f64]) -> Result<f64> {
        let v = self.evaluate(y, pred)?;
        Ok(if self.higher_is_better() { v } else { -v })
    }
}

/// Weighted average of candidate predictions, weights being selection
/// counts over the total count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnsemble {
    pub name: String,
    /// Selected candidates (nonzero weight), in candidate order.
    pub members: Vec<String>,
    pub member_index: Vec<usize>,
    pub counts: Vec<u32>,
    pub weights: Vec<f64>,
    /// Number of greedy steps run (the kept selection may use fewer).
    pub ensemble_size: usize,
    pub metric: SelectionMetric,
    /// Metric of the final combination on the selection data.
    pub score: f64,
    /// Metric of the running selection after each step; the kept selection
    /// is the one after the best step.
    pub trajectory: Vec<f64>,
}

fn combine_counts(columns: &[&[f64]], counts: &[u32]) -> Vec<f64> {
    let n = columns.first().map_or(0, |c| c.len());
    let total = f64::from(counts.iter().sum::<u32>());
    let weighted: Vec<(&[f64], f64)> = columns
        .iter()
        .zip(counts)
        .filter(|(_, &k)| k > 0)
        .map(|(c, &k)| (*c, f64::from(k) / total))
        .collect();
    (0..n)
        .map(|r| weighted.iter().map(|(c, w)| w * c[r]).sum())
        .collect()
}

impl WeightedEnsemble {
    /// Combine the members' predictions, given in `members` order.
    pub fn combine(&self, member_predictions: &[&[f64]]) -> Result<Vec<f64>> {
        if member_predictions.len() != self.members.len() {
            return Err(Error::InvalidArgument(format!(
                "{} expects {} member columns, got {}",
                self.name,
                self.members.len(),
                member_predictions.len()
            )));
        }
        Ok(combine_counts(member_predictions, &self.counts))
    }

    /// Combine from the full candidate list (selection order).
    pub fn combine_candidates(&self, candidates: &[&[f64]]) -> Result<Vec<f64>> {
        let cols: Vec<&[f64]> = self
            .member_index
            .iter()
            .map(|&i| {
                candidates.get(i).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("{} references missing candidate {i}", self.name))
                })
            })
            .collect::<Result<_>>()?;
        self.combine(&cols)
    }
}

/// Forward selection with replacement. Every step adds the candidate whose
/// inclusion gives the best metric (lowest index on ties), even when that
/// is worse than the previous step. The result is the selection after the
/// best-scoring step (earliest on ties), so it is never worse than the best
/// single candidate. Weights are selection counts over the total count.
pub fn greedy_weighted_ensemble(
    columns: &[&[f64]],
    names: &[String],
    y: &[f64],
    metric: SelectionMetric,
    iterations: usize,
) -> Result<WeightedEnsemble> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
    }
    if columns.is_empty() || columns.len() != names.len() {
        return Err(Error::InvalidArgument(format!(
            "{} candidate columns with {} names",
            columns.len(),
            names.len()
        )));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != y.len()) {
        return Err(Error::InvalidArgument(format!(
            "candidate with {} predictions for {} targets",
            c.len(),
            y.len()
        )));
    }
    let m = columns.len();
    let mut counts = vec![0u32; m];
    let mut best_counts = counts.clone();
    let mut incumbent = f64::NEG_INFINITY;
    let mut trajectory = Vec::with_capacity(iterations);
    for step in 0..iterations {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..m {
            counts[c] += 1;
            let u = metric.utility(y, &combine_counts(columns, &counts))?;
            counts[c] -= 1;
            if best.map_or(true, |(_, b)| u > b) {
                best = Some((c, u));
            }
        }
        let (c, u) = best.expect("at least one candidate");
        counts[c] += 1;
        if step == 0 || u > incumbent {
            best_counts.clone_from(&counts);
            incumbent = u;
        }
        trajectory.push(if metric.higher_is_better() { u } else { -u });
    }
    let counts = best_counts;
    let total: u32 = counts.iter().sum();
    let member_index: Vec<usize> = (0..m).filter(|&i| counts[i] > 0).collect();
    let selected: Vec<&[f64]> = member_index.iter().map(|&i| columns[i]).collect();
    let sel_counts: Vec<u32> = member_index.iter().map(|&i| counts[i]).collect();
    let score = metric.evaluate(y, &combine_counts(&selected, &sel_counts))?;
    Ok(WeightedEnsemble {
        name: "WeightedEnsemble".into(),
        members: member_index.iter().map(|&i| names[i].clone()).collect(),
        weights: sel_counts.iter().map(|&k| f64::from(k) / f64::from(total)).collect(),
        counts: sel_counts,
        member_index,
        ensemble_size: iterations,
        metric,
        score,
        trajectory,
    })
}
