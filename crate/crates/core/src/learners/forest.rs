//! Random forests and extremely randomized trees.

use rand::Rng;
use rayon::prelude::*;

use super::tree::{cart_params, grow_cart, Presorted, Tree};
use super::{check_inputs, Family, FittedModel, ModelSpec, ModelState, Task};
use crate::rng;
use crate::tabular::FeatureMatrix;
use crate::Result;

/// Number of features examined per split.
pub(crate) fn features_per_split(spec: &ModelSpec, d: usize) -> usize {
    let k = match spec.hyperparameters.max_features {
        Some(f) => (f * d as f64).round() as usize,
        None => match spec.task {
            Task::Classification => (d as f64).sqrt().ceil() as usize,
            Task::Regression => d.div_ceil(3),
        },
    };
    k.clamp(1, d)
}

/// Fit `n_estimators` trees. Random forests bootstrap rows by default;
/// extra trees use every row and draw each candidate threshold uniformly in
/// the node's feature range.
pub fn fit_forest(x: &FeatureMatrix, y: &[f64], spec: &ModelSpec) -> Result<FittedModel> {
    check_inputs(x, y, spec)?;
    let extra = spec.family == Family::ExtraTrees;
    let bootstrap = spec.hyperparameters.bootstrap.unwrap_or(!extra);
    let pre = Presorted::new(x);
    let mut params = cart_params(spec, features_per_split(spec, x.n_cols()));
    params.random_thresholds = extra;
    let n = x.n_rows();
    let trees: Vec<Tree> = (0..spec.n_estimators())
        .into_par_iter()
        .map(|t| {
            let mut r = rng::seeded(rng::child(spec.seed, t as u64));
            let mut weights = vec![if bootstrap { 0.0 } else { 1.0 }; n];
            if bootstrap {
                for _ in 0..n {
                    weights[r.gen_range(0..n)] += 1.0;
                }
            }
            grow_cart(&pre, y, &weights, spec, &params, &mut r)
        })
        .collect();
    Ok(FittedModel {
        spec: spec.clone(),
        feature_names: x.names().to_vec(),
        state: ModelState::Forest(trees),
        training_loss: Vec::new(),
    })
}

/// Mean of the tree outputs for every row.
pub(crate) fn predict(trees: &[Tree], x: &FeatureMatrix) -> Vec<f64> {
    let inv = 1.0 / trees.len() as f64;
    (0..x.n_rows())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            trees.iter().map(|t| t.predict_row(row)).sum::<f64>() * inv
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::fit_tree;

    fn blobs(n: usize) -> (FeatureMatrix, Vec<f64>) {
        let mut r = rng::seeded(7);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = (i % 2) as f64;
            let centre = if c == 1.0 { 5.0 } else { -5.0 };
            rows.push((0..4).map(|_| centre + r.gen_range(-1.0..1.0)).collect());
            y.push(c);
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn one_unbootstrapped_tree_matches_fit_tree() {
        let (x, _) = blobs(60);
        let y: Vec<f64> = (0..60).map(|i| ((i * 7) % 5) as f64).collect();
        let spec = ModelSpec::new(Family::RandomForest, Task::Regression).with(|h| {
            h.n_estimators = Some(1);
            h.bootstrap = Some(false);
            h.max_features = Some(1.0);
        });
        let forest = fit_forest(&x, &y, &spec).unwrap().predict(&x).unwrap();
        let tree = fit_tree(&x, &y, &ModelSpec { family: Family::Tree, ..spec })
            .unwrap()
            .predict(&x)
            .unwrap();
        assert_eq!(forest, tree);
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (x, y) = blobs(200);
        for family in [Family::RandomForest, Family::ExtraTrees] {
            let spec = ModelSpec::new(family, Task::Classification).with(|h| h.n_estimators = Some(20));
            let m = fit_forest(&x, &y, &spec).unwrap();
            assert_eq!(m.predict_labels(&x).unwrap(), y);
            let p = m.predict(&x).unwrap();
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn fits_are_deterministic_per_seed() {
        let (x, y) = blobs(100);
        let spec = ModelSpec::new(Family::ExtraTrees, Task::Classification)
            .with(|h| h.n_estimators = Some(5))
            .with_seed(3);
        let a = fit_forest(&x, &y, &spec).unwrap();
        let b = fit_forest(&x, &y, &spec).unwrap();
        assert_eq!(a, b);
        let c = fit_forest(&x, &y, &spec.clone().with_seed(4)).unwrap();
        assert_ne!(a.state, c.state);
    }

    #[test]
    fn feature_subset_sizes() {
        let c = ModelSpec::new(Family::RandomForest, Task::Classification);
        let r = ModelSpec::new(Family::RandomForest, Task::Regression);
        assert_eq!(features_per_split(&c, 10), 4);
        assert_eq!(features_per_split(&r, 10), 4);
        assert_eq!(features_per_split(&r, 2), 1);
        assert_eq!(features_per_split(&c.with(|h| h.max_features = Some(0.01)), 10), 1);
    }
}
