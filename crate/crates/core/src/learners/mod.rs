//! From-scratch base learners.
//!
//! All five families share one contract: fit on a [`FeatureMatrix`] and a
//! target vector, then [`FittedModel::predict`] returns positive-class scores
//! in `[0, 1]` for classification or real values for regression.
//!
//! The tree families (CART, random forest, extra trees and the boosted trees
//! inside [`Family::Gbm`]) share one exact-split, best-first tree grower.

mod forest;
mod gbm;
mod impurity;
mod knn;
mod tree;

use serde::{Deserialize, Serialize};

use crate::tabular::FeatureMatrix;
use crate::{Error, Result};

pub use forest::fit_forest;
pub use gbm::{fit_gbm, GbmState};
pub use impurity::{impurity, ImpurityInput};
pub use knn::{fit_knn, KnnState};
pub use tree::{fit_tree, NodeKind, Tree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Tree,
    RandomForest,
    ExtraTrees,
    Gbm,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

/// Hyperparameters by their conventional names. Unset values fall back to the
/// family defaults in the `resolved_*` accessors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub min_samples_split: Option<usize>,
    #[serde(default)]
    pub min_samples_leaf: Option<usize>,
    #[serde(default)]
    pub n_estimators: Option<usize>,
    #[serde(default)]
    pub criterion: Option<Criterion>,
    #[serde(default)]
    pub num_boost_round: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub num_leaves: Option<usize>,
    #[serde(default)]
    pub feature_fraction: Option<f64>,
    #[serde(default)]
    pub min_data_in_leaf: Option<usize>,
    #[serde(default)]
    pub max_leaf_nodes: Option<usize>,
    #[serde(rename = "weights", default)]
    pub knn_weights: Option<KnnWeights>,
    #[serde(default)]
    pub k_neighbors: Option<usize>,
    /// Bootstrap rows per tree (forests).
    #[serde(default)]
    pub bootstrap: Option<bool>,
    /// Fraction of features tried per split (forests). Defaults to ⌈√d⌉
    /// features for classification and ⌈d/3⌉ for regression.
    #[serde(default)]
    pub max_features: Option<f64>,
    /// Random split thresholds inside boosted trees.
    #[serde(default)]
    pub extra_trees: Option<bool>,
    #[serde(default)]
    pub lambda_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub task: Task,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: Family, task: Task) -> Self {
        Self {
            family,
            task,
            hyperparameters: Hyperparameters::default(),
            seed: 0,
        }
    }

    pub fn with(mut self, f: impl FnOnce(&mut Hyperparameters)) -> Self {
        f(&mut self.hyperparameters);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyperparameters;
        let bad = |m: String| Err(Error::Config(m));
        if let Some(lr) = h.learning_rate {
            if !(lr > 0.0 && lr <= 1.0) {
                return bad(format!("learning_rate {lr} outside (0, 1]"));
            }
        }
        if h.n_estimators == Some(0) {
            return bad("n_estimators must be at least 1".into());
        }
        if h.num_boost_round == Some(0) {
            return bad("num_boost_round must be at least 1".into());
        }
        if let Some(l) = h.num_leaves.filter(|&l| l < 2) {
            return bad(format!("num_leaves {l} below 2"));
        }
        if let Some(l) = h.max_leaf_nodes.filter(|&l| l < 2) {
            return bad(format!("max_leaf_nodes {l} below 2"));
        }
        for (name, v) in [("feature_fraction", h.feature_fraction), ("max_features", h.max_features)] {
            if let Some(f) = v.filter(|f| !(*f > 0.0 && *f <= 1.0)) {
                return bad(format!("{name} {f} outside (0, 1]"));
            }
        }
        if h.k_neighbors == Some(0) {
            return bad("k_neighbors must be at least 1".into());
        }
        if h.min_samples_leaf == Some(0) || h.min_data_in_leaf == Some(0) {
            return bad("minimum leaf size must be at least 1".into());
        }
        if let Some(l) = h.lambda_l2.filter(|l| !(*l >= 0.0)) {
            return bad(format!("lambda_l2 {l} is negative"));
        }
        match (self.task, self.criterion()) {
            (Task::Classification, Criterion::SquaredError) => {
                bad("squared_error criterion needs a regression task".into())
            }
            (Task::Regression, Criterion::Gini | Criterion::Entropy) => {
                bad("gini/entropy criteria need a classification task".into())
            }
            _ => Ok(()),
        }
    }

    pub fn criterion(&self) -> Criterion {
        self.hyperparameters.criterion.unwrap_or(match self.task {
            Task::Classification => Criterion::Gini,
            Task::Regression => Criterion::SquaredError,
        })
    }

    pub fn n_estimators(&self) -> usize {
        self.hyperparameters.n_estimators.unwrap_or(100)
    }

    pub fn num_boost_round(&self) -> usize {
        self.hyperparameters.num_boost_round.unwrap_or(100)
    }

    pub fn learning_rate(&self) -> f64 {
        self.hyperparameters.learning_rate.unwrap_or(0.1)
    }

    pub fn k_neighbors(&self) -> usize {
        self.hyperparameters.k_neighbors.unwrap_or(5)
    }

    pub fn knn_weights(&self) -> KnnWeights {
        self.hyperparameters.knn_weights.unwrap_or(KnnWeights::Uniform)
    }

    /// Leaf budget: `num_leaves` for boosting (default 31), `max_leaf_nodes`
    /// for the CART families (default unbounded).
    pub fn max_leaves(&self) -> Option<usize> {
        match self.family {
            Family::Gbm => Some(self.hyperparameters.num_leaves.unwrap_or(31)),
            _ => self.hyperparameters.max_leaf_nodes,
        }
    }

    pub fn min_leaf(&self) -> usize {
        match self.family {
            Family::Gbm => self.hyperparameters.min_data_in_leaf.unwrap_or(20),
            _ => self.hyperparameters.min_samples_leaf.unwrap_or(1),
        }
    }
}

/// Learned state of one of the five families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelState {
    Tree(Tree),
    Forest(Vec<Tree>),
    Gbm(GbmState),
    Knn(KnnState),
}

/// An immutable fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub state: ModelState,
    /// Per-round training loss (boosting only).
    pub training_loss: Vec<f64>,
}

/// Fit any family.
pub fn fit(x: &FeatureMatrix, y: &[f64], spec: &ModelSpec) -> Result<FittedModel> {
    match spec.family {
        Family::Tree => fit_tree(x, y, spec),
        Family::RandomForest | Family::ExtraTrees => fit_forest(x, y, spec),
        Family::Gbm => fit_gbm(x, y, spec),
        Family::Knn => fit_knn(x, y, spec),
    }
}

pub(crate) fn check_inputs(x: &FeatureMatrix, y: &[f64], spec: &ModelSpec) -> Result<()> {
    spec.validate()?;
    if x.n_rows() == 0 {
        return Err(Error::Degenerate("cannot fit on zero rows".into()));
    }
    if x.n_cols() == 0 {
        return Err(Error::Degenerate("cannot fit with zero features".into()));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Schema(format!(
            "{} targets for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    if spec.task == Task::Classification {
        if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::Degenerate(format!(
                "classification target must be 0/1, found {v}"
            )));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite target".into()));
    }
    Ok(())
}

impl FittedModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn task(&self) -> Task {
        self.spec.task
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::Schema(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.n_cols()
            )));
        }
        Ok(match &self.state {
            ModelState::Tree(t) => (0..x.n_rows()).map(|i| t.predict_row(x.row(i))).collect(),
            ModelState::Forest(trees) => forest::predict(trees, x),
            ModelState::Gbm(g) => g.predict(x),
            ModelState::Knn(k) => k.predict(x, self.k(), self.spec.knn_weights()),
        })
    }

    fn k(&self) -> usize {
        self.spec.k_neighbors()
    }

    /// Hard labels with the `score >= 0.5` rule.
    pub fn predict_labels(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        Ok(self
            .predict(x)?
            .into_iter()
            .map(|s| if s >= 0.5 { 1.0 } else { 0.0 })
            .collect())
    }

    /// One-line description echoing the effective hyperparameters.
    pub fn summary(&self) -> String {
        let h = &self.spec.hyperparameters;
        let mut parts = vec![format!("{:?}/{:?}", self.spec.family, self.spec.task)];
        match &self.state {
            ModelState::Tree(t) => parts.push(format!("leaves={} depth={}", t.n_leaves(), t.depth())),
            ModelState::Forest(trees) => parts.push(format!("n_estimators={}", trees.len())),
            ModelState::Gbm(g) => parts.push(format!(
                "num_boost_round={} learning_rate={}",
                g.trees.len(),
                self.spec.learning_rate()
            )),
            ModelState::Knn(_) => parts.push(format!(
                "k_neighbors={} weights={:?}",
                self.k(),
                self.spec.knn_weights()
            )),
        }
        if let Some(v) = h.max_leaf_nodes {
            parts.push(format!("max_leaf_nodes={v}"));
        }
        if let Some(v) = h.num_leaves {
            parts.push(format!("num_leaves={v}"));
        }
        if let Some(v) = h.feature_fraction {
            parts.push(format!("feature_fraction={v}"));
        }
        if let Some(v) = h.min_data_in_leaf {
            parts.push(format!("min_data_in_leaf={v}"));
        }
        if matches!(self.spec.family, Family::Tree | Family::RandomForest | Family::ExtraTrees) {
            parts.push(format!("criterion={:?}", self.spec.criterion()));
        }
        parts.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_toml_with_conventional_names() {
        let spec = ModelSpec::new(Family::Knn, Task::Regression).with(|h| {
            h.knn_weights = Some(KnnWeights::Distance);
            h.k_neighbors = Some(7);
        });
        let text = toml::to_string(&spec).unwrap();
        assert!(text.contains("weights = \"distance\""), "{text}");
        let back: ModelSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);

        let forest: ModelSpec = toml::from_str(
            "family = \"random_forest\"\ntask = \"classification\"\n[hyperparameters]\n\
             n_estimators = 300\nmax_leaf_nodes = 15000\ncriterion = \"gini\"\nmax_depth = 12\n\
             min_samples_split = 4\nmin_samples_leaf = 2\n",
        )
        .unwrap();
        assert_eq!(forest.n_estimators(), 300);
        assert_eq!(forest.max_leaves(), Some(15000));
        let gbm: ModelSpec = toml::from_str(
            "family = \"gbm\"\ntask = \"regression\"\n[hyperparameters]\n\
             num_boost_round = 58\nlearning_rate = 0.05\n",
        )
        .unwrap();
        assert_eq!(toml::from_str::<ModelSpec>(&toml::to_string(&gbm).unwrap()).unwrap(), gbm);
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        let base = ModelSpec::new(Family::Gbm, Task::Regression);
        for spec in [
            base.clone().with(|h| h.learning_rate = Some(0.0)),
            base.clone().with(|h| h.learning_rate = Some(1.5)),
            base.clone().with(|h| h.num_leaves = Some(1)),
            base.clone().with(|h| h.feature_fraction = Some(0.0)),
            base.clone().with(|h| h.n_estimators = Some(0)),
            base.clone().with(|h| h.k_neighbors = Some(0)),
            base.clone().with(|h| h.criterion = Some(Criterion::Gini)),
        ] {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
        assert!(base.with(|h| h.learning_rate = Some(1.0)).validate().is_ok());
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let spec = ModelSpec::new(Family::Tree, Task::Classification);
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(fit(&x, &[0.0], &spec).is_err());
        assert!(fit(&x, &[0.0, 2.0], &spec).is_err());
        let empty = FeatureMatrix::new(vec![], 2, vec![]).unwrap();
        assert!(matches!(fit(&empty, &[0.0, 1.0], &spec), Err(Error::Degenerate(_))));
        let m = fit(&x, &[0.0, 1.0], &spec).unwrap();
        let wide = FeatureMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(m.predict(&wide), Err(Error::Schema(_))));
    }
}
