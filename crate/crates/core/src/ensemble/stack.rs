use serde::{Deserialize, Serialize};

use super::{fit_bagged, greedy_weighted_ensemble, kfold_assign, BaggedModel, FoldAssignment};
use super::{SelectionMetric, WeightedEnsemble};
use crate::learners::{Family, Hyperparameters, ModelSpec, Task};
use crate::rng;
use crate::tabular::FeatureMatrix;
use crate::{Error, Result};

/// A named layer member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberConfig {
    pub name: String,
    pub family: Family,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
}

impl MemberConfig {
    pub fn new(name: &str, family: Family, f: impl FnOnce(&mut Hyperparameters)) -> Self {
        let mut hyperparameters = Hyperparameters::default();
        f(&mut hyperparameters);
        Self {
            name: name.to_string(),
            family,
            hyperparameters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackLayerConfig {
    pub members: Vec<MemberConfig>,
}

fn default_folds() -> usize {
    5
}

/// Layers of members, bagged over a shared fold assignment and topped by a
/// greedy weighted ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackConfig {
    pub task: Task,
    #[serde(default = "default_folds")]
    pub k_folds: usize,
    pub ensemble_size: usize,
    #[serde(default)]
    pub metric: Option<SelectionMetric>,
    pub layers: Vec<StackLayerConfig>,
}

impl StackConfig {
    pub fn metric(&self) -> SelectionMetric {
        self.metric.unwrap_or(SelectionMetric::for_task(self.task))
    }

    /// Truncate to `depth` layers, or extend by repeating the member set of
    /// the last configured layer.
    pub fn with_depth(mut self, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Config("a stack needs at least one layer".into()));
        }
        let last = self
            .layers
            .last()
            .cloned()
            .ok_or_else(|| Error::Config("stack has no layers".into()))?;
        self.layers.truncate(depth);
        while self.layers.len() < depth {
            self.layers.push(last.clone());
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.layers.is_empty() {
            return bad("stack has no layers".into());
        }
        if self.k_folds < 2 {
            return bad(format!("k_folds = {} (need at least 2)", self.k_folds));
        }
        if self.ensemble_size == 0 {
            return bad("ensemble_size must be at least 1".into());
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.members.is_empty() {
                return bad(format!("layer {} has no members", i + 1));
            }
            let mut names: Vec<&str> = layer.members.iter().map(|m| m.name.as_str()).collect();
            names.sort_unstable();
            if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
                return bad(format!("layer {} repeats member {:?}", i + 1, w[0]));
            }
            for m in &layer.members {
                self.member_spec(m, 0).validate().map_err(|e| {
                    Error::Config(format!("layer {} member {}: {e}", i + 1, m.name))
                })?;
            }
        }
        if self.metric() == SelectionMetric::Accuracy && self.task != Task::Classification {
            return bad("accuracy selection needs a classification stack".into());
        }
        Ok(())
    }

    fn member_spec(&self, m: &MemberConfig, seed: u64) -> ModelSpec {
        ModelSpec {
            family: m.family,
            task: self.task,
            hyperparameters: m.hyperparameters.clone(),
            seed,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("stack config serializes")
    }
}

/// Display name of a member: `<name>_BAG_L<layer>`.
pub fn member_display_name(name: &str, layer: usize) -> String {
    format!("{name}_BAG_L{layer}")
}

pub enum StackMode<'a> {
    /// Append each lower member's out-of-fold column.
    TrainingOof,
    /// Append each lower member's averaged prediction on `lower_input`, the
    /// features the lower layer consumes.
    Inference { lower_input: &'a FeatureMatrix },
}

/// Raw features followed by one column per lower-layer member, in member
/// order.
pub fn build_stack_features(
    x_raw: &FeatureMatrix,
    lower: &[BaggedModel],
    mode: StackMode<'_>,
) -> Result<FeatureMatrix> {
    let mut extra = Vec::with_capacity(lower.len());
    for m in lower {
        let col = match &mode {
            StackMode::TrainingOof => m.oof.clone(),
            StackMode::Inference { lower_input } => {
                if lower_input.n_rows() != x_raw.n_rows() {
                    return Err(Error::Schema(format!(
                        "{} lower-layer rows for {} raw rows",
                        lower_input.n_rows(),
                        x_raw.n_rows()
                    )));
                }
                m.predict(lower_input)?
            }
        };
        if col.len() != x_raw.n_rows() {
            return Err(Error::Schema(format!(
                "{} has {} out-of-fold values for {} rows",
                m.name,
                col.len(),
                x_raw.n_rows()
            )));
        }
        extra.push((m.name.clone(), col));
    }
    x_raw.hstack(&extra)
}

/// A trained stack: every layer's bagged members and one weighted ensemble
/// per layer (the last one is the model's output).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedEnsemble {
    pub config: StackConfig,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub folds: FoldAssignment,
    pub layers: Vec<Vec<BaggedModel>>,
    pub ensembles: Vec<WeightedEnsemble>,
}

/// Predictions of one named model of the stack.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedPrediction {
    pub name: String,
    pub layer: usize,
    pub family: Option<Family>,
    pub values: Vec<f64>,
}

/// Train every layer in order and weight each layer's members greedily on
/// their out-of-fold predictions.
pub fn fit_stack(x: &FeatureMatrix, y: &[f64], config: &StackConfig, seed: u64) -> Result<StackedEnsemble> {
    config.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::Schema(format!("{} targets for {} rows", y.len(), x.n_rows())));
    }
    let stratify = (config.task == Task::Classification).then_some(y);
    let folds = kfold_assign(x.n_rows(), config.k_folds, seed, stratify)?;
    let metric = config.metric();
    let mut layers: Vec<Vec<BaggedModel>> = Vec::with_capacity(config.layers.len());
    let mut ensembles = Vec::with_capacity(config.layers.len());
    for (li, layer) in config.layers.iter().enumerate() {
        let level = li + 1;
        let input = match layers.last() {
            None => x.clone(),
            Some(lower) => build_stack_features(x, lower, StackMode::TrainingOof)?,
        };
        let mut members = Vec::with_capacity(layer.members.len());
        for m in &layer.members {
            let name = member_display_name(&m.name, level);
            let spec = config.member_spec(m, rng::substream(seed, &format!("model:{name}")));
            members.push(fit_bagged(&name, &spec, &input, y, &folds)?);
        }
        let cols: Vec<&[f64]> = members.iter().map(|m| m.oof.as_slice()).collect();
        let names: Vec<String> = members.iter().map(|m| m.name.clone()).collect();
        let mut ens = greedy_weighted_ensemble(&cols, &names, y, metric, config.ensemble_size)?;
        ens.name = format!("WeightedEnsemble_L{}", level + 1);
        ensembles.push(ens);
        layers.push(members);
    }
    Ok(StackedEnsemble {
        config: config.clone(),
        seed,
        feature_names: x.names().to_vec(),
        folds,
        layers,
        ensembles,
    })
}

impl StackedEnsemble {
    pub fn task(&self) -> Task {
        self.config.task
    }

    pub fn final_ensemble(&self) -> &WeightedEnsemble {
        self.ensembles.last().expect("stack has at least one layer")
    }

    /// Input width of each layer.
    pub fn layer_feature_counts(&self) -> Vec<usize> {
        (0..self.layers.len())
            .map(|l| {
                self.feature_names.len() + if l == 0 { 0 } else { self.layers[l - 1].len() }
            })
            .collect()
    }

    fn check_schema(&self, x: &FeatureMatrix) -> Result<()> {
        if x.names() != self.feature_names.as_slice() {
            return Err(Error::Schema(format!(
                "stack expects features {:?}, got {:?}",
                self.feature_names,
                x.names()
            )));
        }
        Ok(())
    }

    /// Every member's and every weighted ensemble's predictions, layer by
    /// layer; the last entry is the stack output.
    pub fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<NamedPrediction>> {
        self.check_schema(x)?;
        let mut out = Vec::new();
        let mut input = x.clone();
        for (li, members) in self.layers.iter().enumerate() {
            let preds: Vec<Vec<f64>> = members
                .iter()
                .map(|m| m.predict(&input))
                .collect::<Result<_>>()?;
            let ens = &self.ensembles[li];
            let refs: Vec<&[f64]> = preds.iter().map(Vec::as_slice).collect();
            let combined = ens.combine_candidates(&refs)?;
            if li + 1 < self.layers.len() {
                let extra: Vec<(String, Vec<f64>)> = members
                    .iter()
                    .zip(&preds)
                    .map(|(m, p)| (m.name.clone(), p.clone()))
                    .collect();
                input = x.hstack(&extra)?;
            }
            for (m, p) in members.iter().zip(preds) {
                out.push(NamedPrediction {
                    name: m.name.clone(),
                    layer: li + 1,
                    family: Some(m.spec.family),
                    values: p,
                });
            }
            out.push(NamedPrediction {
                name: ens.name.clone(),
                layer: li + 2,
                family: None,
                values: combined,
            });
        }
        Ok(out)
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        Ok(self.predict_all(x)?.pop().expect("non-empty stack").values)
    }

    /// Out-of-fold predictions on the training rows, in `predict_all` order.
    pub fn validation_predictions(&self) -> Result<Vec<NamedPrediction>> {
        let mut out = Vec::new();
        for (li, members) in self.layers.iter().enumerate() {
            let refs: Vec<&[f64]> = members.iter().map(|m| m.oof.as_slice()).collect();
            for m in members {
                out.push(NamedPrediction {
                    name: m.name.clone(),
                    layer: li + 1,
                    family: Some(m.spec.family),
                    values: m.oof.clone(),
                });
            }
            let ens = &self.ensembles[li];
            out.push(NamedPrediction {
                name: ens.name.clone(),
                layer: li + 2,
                family: None,
                values: ens.combine_candidates(&refs)?,
            });
        }
        Ok(out)
    }
}
