//! Brute-force k-nearest-neighbour regression and scoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_inputs, FittedModel, KnnWeights, ModelSpec, ModelState};
use crate::tabular::FeatureMatrix;
use crate::{Error, Result};

/// Stored training rows and targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnState {
    pub n_features: usize,
    pub values: Vec<f64>,
    pub targets: Vec<f64>,
}

impl KnnState {
    /// The `k` nearest training rows as `(squared distance, index)`, nearest
    /// first; equal distances resolve to the lower index.
    pub fn neighbors(&self, query: &[f64], k: usize) -> Vec<(f64, usize)> {
        let d = self.n_features;
        let mut all: Vec<(f64, usize)> = self
            .values
            .chunks_exact(d)
            .enumerate()
            .map(|(i, row)| {
                let s: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let k = k.min(all.len());
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, cmp);
            all.truncate(k);
        }
        all.sort_by(cmp);
        all
    }

    pub fn predict_row(&self, query: &[f64], k: usize, weights: KnnWeights) -> f64 {
        let nb = self.neighbors(query, k);
        match weights {
            KnnWeights::Uniform => {
                nb.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / nb.len() as f64
            }
            KnnWeights::Distance => {
                let exact: Vec<f64> = nb
                    .iter()
                    .filter(|&&(d2, _)| d2 == 0.0)
                    .map(|&(_, i)| self.targets[i])
                    .collect();
                if !exact.is_empty() {
                    return exact.iter().sum::<f64>() / exact.len() as f64;
                }
                let (mut num, mut den) = (0.0, 0.0);
                for &(d2, i) in &nb {
                    let w = 1.0 / d2.sqrt();
                    num += w * self.targets[i];
                    den += w;
                }
                num / den
            }
        }
    }

    pub fn predict(&self, x: &FeatureMatrix, k: usize, weights: KnnWeights) -> Vec<f64> {
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i), k, weights))
            .collect()
    }
}

pub fn fit_knn(x: &FeatureMatrix, y: &[f64], spec: &ModelSpec) -> Result<FittedModel> {
    check_inputs(x, y, spec)?;
    let k = spec.k_neighbors();
    if k > x.n_rows() {
        return Err(Error::InvalidArgument(format!(
            "k_neighbors {k} exceeds the {} training rows",
            x.n_rows()
        )));
    }
    Ok(FittedModel {
        spec: spec.clone(),
        feature_names: x.names().to_vec(),
        state: ModelState::Knn(KnnState {
            n_features: x.n_cols(),
            values: x.values().to_vec(),
            targets: y.to_vec(),
        }),
        training_loss: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Family, Task};

    fn knn(k: usize, w: KnnWeights) -> ModelSpec {
        ModelSpec::new(Family::Knn, Task::Regression).with(|h| {
            h.k_neighbors = Some(k);
            h.knn_weights = Some(w);
        })
    }

    fn grid() -> (FeatureMatrix, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..25).map(|i| vec![(i % 5) as f64, (i / 5) as f64 * 1.5]).collect();
        let y = (0..25).map(|i| (i * i % 11) as f64).collect();
        (FeatureMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn one_neighbor_memorizes() {
        let (x, y) = grid();
        for w in [KnnWeights::Uniform, KnnWeights::Distance] {
            assert_eq!(fit_knn(&x, &y, &knn(1, w)).unwrap().predict(&x).unwrap(), y);
        }
    }

    #[test]
    fn equidistant_pair_averages() {
        let x = FeatureMatrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let m = fit_knn(&x, &[0.0, 1.0], &knn(2, KnnWeights::Uniform)).unwrap();
        let q = FeatureMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(m.predict(&q).unwrap(), vec![0.5]);
    }

    #[test]
    fn distance_weighting_short_circuits_exact_matches() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let m = fit_knn(&x, &[1.0, 0.0, 0.0, 0.0, 0.0], &knn(5, KnnWeights::Distance)).unwrap();
        let q = FeatureMatrix::from_rows(&[vec![0.0], vec![0.5]]).unwrap();
        let p = m.predict(&q).unwrap();
        assert_eq!(p[0], 1.0);
        // Oracle: 1/d weights at distances 0.5, 0.5, 1.5, 2.5, 3.5.
        let w = [2.0, 2.0, 1.0 / 1.5, 1.0 / 2.5, 1.0 / 3.5];
        assert!((p[1] - w[0] / w.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn k_equal_to_n_predicts_global_mean() {
        let (x, y) = grid();
        let mean = y.iter().sum::<f64>() / 25.0;
        let q = FeatureMatrix::from_rows(&[vec![10.0, -3.0], vec![2.0, 2.0]]).unwrap();
        let p = fit_knn(&x, &y, &knn(25, KnnWeights::Uniform)).unwrap().predict(&q).unwrap();
        assert!(p.iter().all(|v| (v - mean).abs() < 1e-12));
    }

    #[test]
    fn ties_resolve_to_lower_index() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![-1.0], vec![1.0]]).unwrap();
        let m = fit_knn(&x, &[5.0, 7.0, 9.0], &knn(1, KnnWeights::Uniform)).unwrap();
        let q = FeatureMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(m.predict(&q).unwrap(), vec![5.0]);
    }

    #[test]
    fn k_beyond_rows_is_rejected() {
        let (x, y) = grid();
        assert!(matches!(fit_knn(&x, &y, &knn(26, KnnWeights::Uniform)), Err(Error::InvalidArgument(_))));
    }
}
