use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FoldAssignment;
use crate::learners::{self, FittedModel, ModelSpec, Task};
use crate::rng;
use crate::tabular::FeatureMatrix;
use crate::{Error, Result};

/// One model per fold, each trained with its fold held out, plus the
/// out-of-fold predictions for every training row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedModel {
    pub name: String,
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub models: Vec<FittedModel>,
    pub oof: Vec<f64>,
}

impl BaggedModel {
    /// Mean of the fold-model predictions.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.names() != self.feature_names.as_slice() {
            return Err(Error::Schema(format!(
                "{} expects features {:?}, got {:?}",
                self.name,
                self.feature_names,
                x.names()
            )));
        }
        let mut sum = vec![0.0; x.n_rows()];
        for m in &self.models {
            for (s, p) in sum.iter_mut().zip(m.predict(x)?) {
                *s += p;
            }
        }
        let k = self.models.len() as f64;
        Ok(sum.into_iter().map(|s| s / k).collect())
    }
}

/// Train one copy of `spec` per fold. Fold model `i` sees every row outside
/// fold `i` and supplies the out-of-fold predictions for fold `i`.
pub fn fit_bagged(
    name: &str,
    spec: &ModelSpec,
    x: &FeatureMatrix,
    y: &[f64],
    folds: &FoldAssignment,
) -> Result<BaggedModel> {
    if folds.n_rows() != x.n_rows() || y.len() != x.n_rows() {
        return Err(Error::InvalidArgument(format!(
            "fold assignment covers {} rows, data has {} rows and {} targets",
            folds.n_rows(),
            x.n_rows(),
            y.len()
        )));
    }
    let fitted: Vec<(FittedModel, Vec<usize>, Vec<f64>)> = (0..folds.k)
        .into_par_iter()
        .map(|fold| {
            let train = folds.train_rows(fold);
            let yt: Vec<f64> = train.iter().map(|&r| y[r]).collect();
            if spec.task == Task::Classification
                && (yt.iter().all(|&v| v == 1.0) || yt.iter().all(|&v| v == 0.0))
            {
                return Err(Error::Degenerate(format!(
                    "training fold {fold} of {name} contains a single class"
                )));
            }
            let fold_spec = spec.clone().with_seed(rng::child(spec.seed, fold as u64));
            let model = learners::fit(&x.select_rows(&train), &yt, &fold_spec)?;
            let held = folds.held_out_rows(fold);
            let pred = model.predict(&x.select_rows(&held))?;
            Ok((model, held, pred))
        })
        .collect::<Result<_>>()?;
    let mut oof = vec![f64::NAN; x.n_rows()];
    let mut models = Vec::with_capacity(folds.k);
    for (model, held, pred) in fitted {
        for (r, p) in held.into_iter().zip(pred) {
            oof[r] = p;
        }
        models.push(model);
    }
    Ok(BaggedModel {
        name: name.to_string(),
        spec: spec.clone(),
        feature_names: x.names().to_vec(),
        models,
        oof,
    })
}
