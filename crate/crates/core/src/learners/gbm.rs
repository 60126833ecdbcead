//! Gradient-boosted trees with leaf-wise growth and Newton leaf values.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::impurity::SplitScore;
use super::tree::{grow, GrowParams, Presorted, Purity, RowStats, Tree};
use super::{check_inputs, FittedModel, ModelSpec, ModelState, Task};
use crate::rng;
use crate::tabular::FeatureMatrix;
use crate::{Error, Result};

const MIN_HESSIAN: f64 = 1e-3;
const CLIP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmState {
    pub task: Task,
    /// Initial raw score: target mean or prior log-odds.
    pub init: f64,
    /// Round trees with the learning rate already folded into the leaves.
    pub trees: Vec<Tree>,
}

impl GbmState {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.init + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows())
            .map(|i| {
                let f = self.raw_score(x.row(i));
                match self.task {
                    Task::Classification => sigmoid(f),
                    Task::Regression => f,
                }
            })
            .collect()
    }
}

fn sigmoid(f: f64) -> f64 {
    1.0 / (1.0 + (-f).exp())
}

fn loss(task: Task, y: &[f64], f: &[f64]) -> f64 {
    let n = y.len() as f64;
    match task {
        Task::Regression => y.iter().zip(f).map(|(y, f)| (y - f) * (y - f)).sum::<f64>() / n,
        Task::Classification => {
            y.iter()
                .zip(f)
                .map(|(&y, &f)| {
                    let p = sigmoid(f).clamp(CLIP, 1.0 - CLIP);
                    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
                })
                .sum::<f64>()
                / n
        }
    }
}

/// Stagewise boosting of squared error (regression) or logistic loss
/// (classification). Each round grows one leaf-wise tree on the gradients,
/// optionally on a per-round random subset of the features.
pub fn fit_gbm(x: &FeatureMatrix, y: &[f64], spec: &ModelSpec) -> Result<FittedModel> {
    check_inputs(x, y, spec)?;
    let h = &spec.hyperparameters;
    let n = x.n_rows();
    let d = x.n_cols();
    let mean = y.iter().sum::<f64>() / n as f64;
    let init = match spec.task {
        Task::Regression => mean,
        Task::Classification => {
            if mean == 0.0 || mean == 1.0 {
                return Err(Error::Degenerate(
                    "boosting needs both classes in the training target".into(),
                ));
            }
            (mean / (1.0 - mean)).ln()
        }
    };
    let lr = spec.learning_rate();
    let n_features = match h.feature_fraction {
        Some(ff) => ((ff * d as f64).round() as usize).clamp(1, d),
        None => d,
    };
    let params = GrowParams {
        score: SplitScore::Newton {
            lambda: h.lambda_l2.unwrap_or(0.0),
        },
        max_depth: h.max_depth,
        min_split: 2.0 * spec.min_leaf() as f64,
        min_leaf: spec.min_leaf() as f64,
        min_hessian: MIN_HESSIAN,
        max_leaves: spec.max_leaves(),
        max_features: n_features,
        random_thresholds: h.extra_trees.unwrap_or(false),
        require_positive_gain: true,
    };

    let pre = Presorted::new(x);
    let mut r = rng::seeded(spec.seed);
    let ones = vec![1.0; n];
    let mut f = vec![init; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(spec.num_boost_round());
    let mut training_loss = Vec::with_capacity(spec.num_boost_round());
    for _ in 0..spec.num_boost_round() {
        for i in 0..n {
            match spec.task {
                Task::Regression => {
                    grad[i] = f[i] - y[i];
                    hess[i] = 1.0;
                }
                Task::Classification => {
                    let p = sigmoid(f[i]);
                    grad[i] = p - y[i];
                    hess[i] = p * (1.0 - p);
                }
            }
        }
        let allowed: Vec<usize> = if n_features < d {
            let mut s = sample(&mut r, d, n_features).into_vec();
            s.sort_unstable();
            s
        } else {
            (0..d).collect()
        };
        let mut order = vec![Vec::new(); d];
        for &j in &allowed {
            order[j] = pre.order[j].clone();
        }
        let stats = RowStats {
            n: &ones,
            a: &hess,
            b: &grad,
        };
        let mut out = grow(&pre.cols, order, stats, Purity::Never, &allowed, &params, &mut r);
        out.tree.scale_leaves(lr);
        for &(node, s, e) in &out.leaves {
            let v = out.tree.nodes()[node].value_of_leaf();
            for &row in &out.rows[s..e] {
                f[row as usize] += v;
            }
        }
        trees.push(out.tree);
        training_loss.push(loss(spec.task, y, &f));
    }
    Ok(FittedModel {
        spec: spec.clone(),
        feature_names: x.names().to_vec(),
        state: ModelState::Gbm(GbmState {
            task: spec.task,
            init,
            trees,
        }),
        training_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Family;
    use proptest::prelude::*;
    use rand::Rng;

    fn gbm(task: Task) -> ModelSpec {
        ModelSpec::new(Family::Gbm, task)
    }

    #[test]
    fn single_stump_recovers_step_exactly() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let spec = gbm(Task::Regression).with(|h| {
            h.learning_rate = Some(1.0);
            h.num_boost_round = Some(1);
            h.num_leaves = Some(2);
            h.min_data_in_leaf = Some(1);
        });
        let m = fit_gbm(&x, &[0.0, 0.0, 10.0, 10.0], &spec).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![0.0, 0.0, 10.0, 10.0]);
        assert_eq!(m.training_loss, vec![0.0]);
    }

    #[test]
    fn constant_target_stays_constant() {
        let x = FeatureMatrix::from_rows(&(0..30).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let spec = gbm(Task::Regression).with(|h| h.min_data_in_leaf = Some(1));
        let m = fit_gbm(&x, &[2.5; 30], &spec).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![2.5; 30]);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            fit_gbm(&x, &[1.0, 1.0], &gbm(Task::Classification)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn large_preset_config_is_accepted_and_echoed() {
        let spec = gbm(Task::Classification).with(|h| {
            h.learning_rate = Some(0.03);
            h.num_leaves = Some(128);
            h.feature_fraction = Some(0.9);
            h.min_data_in_leaf = Some(5);
            h.num_boost_round = Some(508);
        });
        let mut r = rng::seeded(1);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| (0..10).map(|_| r.gen_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|v| f64::from(v[0] + v[3] > 1.0)).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let m = fit_gbm(&x, &y, &spec).unwrap();
        assert_eq!(m.training_loss.len(), 508);
        let s = m.summary();
        for part in ["num_boost_round=508", "learning_rate=0.03", "num_leaves=128", "feature_fraction=0.9", "min_data_in_leaf=5"] {
            assert!(s.contains(part), "{s}");
        }
        assert!(m.predict(&x).unwrap().iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(m.predict_labels(&x).unwrap(), y);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn regression_loss_never_increases(seed in 0u64..1000, lr in 0.01f64..0.1) {
            let mut r = rng::seeded(seed);
            let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
            let y: Vec<f64> = rows.iter().map(|v| v[0] * 3.0 - v[1] * v[2] + r.gen_range(-0.3..0.3)).collect();
            let x = FeatureMatrix::from_rows(&rows).unwrap();
            let spec = gbm(Task::Regression).with(|h| {
                h.learning_rate = Some(lr);
                h.num_boost_round = Some(40);
                h.min_data_in_leaf = Some(3);
                h.num_leaves = Some(8);
            });
            let m = fit_gbm(&x, &y, &spec).unwrap();
            for w in m.training_loss.windows(2) {
                prop_assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
            }
        }
    }
}
