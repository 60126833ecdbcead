//! Built-in stack configurations.
//!
//! `paper-classification` is a single bagged layer of eleven members topped
//! by a 27-step weighted ensemble; `paper-regression` is two layers (nine base
//! members, seven stacker members) topped by a 100-step weighted ensemble.
//! The `LGBM`, `XGBoost` and `CatBoost` members are configurations of the one
//! gradient-boosting family. Settings not fixed by the published tables use
//! the usual library defaults of those boosters.
//!
//! The `fast-*` presets are small stacks of the same shape for tests, examples
//! and quick experiments.

use super::{MemberConfig, StackConfig, StackLayerConfig};
use crate::learners::{Criterion, Family, Hyperparameters, KnnWeights, Task};
use crate::{Error, Result};

pub const PRESET_NAMES: [&str; 4] = [
    "paper-classification",
    "paper-regression",
    "fast-classification",
    "fast-regression",
];

fn lgbm(name: &str, lr: f64, rounds: usize) -> MemberConfig {
    MemberConfig::new(name, Family::Gbm, |h| {
        h.learning_rate = Some(lr);
        h.num_boost_round = Some(rounds);
    })
}

fn lgbm_large(rounds: usize) -> MemberConfig {
    MemberConfig::new("LGBM_Large", Family::Gbm, |h| {
        h.learning_rate = Some(0.03);
        h.num_leaves = Some(128);
        h.feature_fraction = Some(0.9);
        h.min_data_in_leaf = Some(5);
        h.num_boost_round = Some(rounds);
    })
}

fn lgbm_xt(rounds: usize) -> MemberConfig {
    MemberConfig::new("LGBM_XT", Family::Gbm, |h| {
        h.learning_rate = Some(0.05);
        h.extra_trees = Some(true);
        h.num_boost_round = Some(rounds);
    })
}

fn xgboost(rounds: usize) -> MemberConfig {
    MemberConfig::new("XGBoost", Family::Gbm, |h| {
        h.learning_rate = Some(0.1);
        h.max_depth = Some(6);
        h.num_leaves = Some(64);
        h.min_data_in_leaf = Some(1);
        h.lambda_l2 = Some(1.0);
        h.num_boost_round = Some(rounds);
    })
}

fn catboost(rounds: usize) -> MemberConfig {
    MemberConfig::new("CatBoost", Family::Gbm, |h| {
        h.learning_rate = Some(0.05);
        h.max_depth = Some(6);
        h.num_leaves = Some(64);
        h.min_data_in_leaf = Some(1);
        h.lambda_l2 = Some(3.0);
        h.num_boost_round = Some(rounds);
    })
}

fn forest(name: &str, family: Family, criterion: Criterion, n: usize) -> MemberConfig {
    MemberConfig::new(name, family, |h: &mut Hyperparameters| {
        h.n_estimators = Some(n);
        h.max_leaf_nodes = Some(15000);
        h.criterion = Some(criterion);
    })
}

fn knn(name: &str, weights: KnnWeights) -> MemberConfig {
    MemberConfig::new(name, Family::Knn, |h| h.knn_weights = Some(weights))
}

fn paper_classification() -> StackConfig {
    use Criterion::{Entropy, Gini};
    use Family::{ExtraTrees, RandomForest};
    StackConfig {
        task: Task::Classification,
        k_folds: 5,
        ensemble_size: 27,
        metric: None,
        layers: vec![StackLayerConfig {
            members: vec![
                lgbm_large(508),
                lgbm("LGBM", 0.05, 900),
                xgboost(300),
                forest("ET_Gini", ExtraTrees, Gini, 300),
                forest("RF_Gini", RandomForest, Gini, 300),
                lgbm_xt(600),
                forest("RF_Entropy", RandomForest, Entropy, 300),
                forest("ET_Entropy", ExtraTrees, Entropy, 300),
                catboost(1000),
                knn("KNN_Distance", KnnWeights::Distance),
                knn("KNN_Uniform", KnnWeights::Uniform),
            ],
        }],
    }
}

fn paper_regression() -> StackConfig {
    use Criterion::SquaredError;
    use Family::{ExtraTrees, RandomForest};
    StackConfig {
        task: Task::Regression,
        k_folds: 5,
        ensemble_size: 100,
        metric: None,
        layers: vec![
            StackLayerConfig {
                members: vec![
                    forest("RF_MSE", RandomForest, SquaredError, 300),
                    lgbm_xt(3668),
                    forest("ET_MSE", ExtraTrees, SquaredError, 300),
                    knn("KNN_Uniform", KnnWeights::Uniform),
                    catboost(9226),
                    lgbm_large(489),
                    knn("KNN_Distance", KnnWeights::Distance),
                    lgbm("LGBM", 0.05, 602),
                    xgboost(300),
                ],
            },
            StackLayerConfig {
                members: vec![
                    lgbm("LGBM", 0.05, 58),
                    catboost(714),
                    forest("ET_MSE", ExtraTrees, SquaredError, 300),
                    lgbm_large(172),
                    xgboost(300),
                    forest("RF_MSE", RandomForest, SquaredError, 300),
                    lgbm_xt(600),
                ],
            },
        ],
    }
}

fn fast(task: Task) -> StackConfig {
    let (criterion, rf, et, layers) = match task {
        Task::Classification => (Criterion::Gini, "RF_Gini", "ET_Gini", 1),
        Task::Regression => (Criterion::SquaredError, "RF_MSE", "ET_MSE", 2),
    };
    let base = StackLayerConfig {
        members: vec![
            lgbm("LGBM", 0.1, 100),
            forest(rf, Family::RandomForest, criterion, 40),
            forest(et, Family::ExtraTrees, criterion, 40),
            knn("KNN_Uniform", KnnWeights::Uniform),
            knn("KNN_Distance", KnnWeights::Distance),
        ],
    };
    let stacker = StackLayerConfig {
        members: vec![lgbm("LGBM", 0.1, 50), forest(et, Family::ExtraTrees, criterion, 40)],
    };
    StackConfig {
        task,
        k_folds: 5,
        ensemble_size: 25,
        metric: None,
        layers: [base, stacker].into_iter().take(layers).collect(),
    }
}

pub fn preset(name: &str) -> Result<StackConfig> {
    match name {
        "paper-classification" => Ok(paper_classification()),
        "paper-regression" => Ok(paper_regression()),
        "fast-classification" => Ok(fast(Task::Classification)),
        "fast-regression" => Ok(fast(Task::Regression)),
        other => Err(Error::Config(format!(
            "unknown preset {other:?} (known: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for n in PRESET_NAMES {
            preset(n).unwrap().validate().unwrap();
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn paper_shapes() {
        let c = preset("paper-classification").unwrap();
        assert_eq!((c.layers.len(), c.layers[0].members.len(), c.ensemble_size), (1, 11, 27));
        let large = &c.layers[0].members[0];
        assert_eq!(large.name, "LGBM_Large");
        assert_eq!(large.hyperparameters.num_boost_round, Some(508));
        let r = preset("paper-regression").unwrap();
        assert_eq!((r.layers[0].members.len(), r.layers[1].members.len(), r.ensemble_size), (9, 7, 100));
        assert_eq!(r.layers[0].members[4].hyperparameters.num_boost_round, Some(9226));
    }
}
