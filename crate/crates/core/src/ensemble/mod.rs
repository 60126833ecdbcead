//! K-fold bagging, multi-layer stacking and greedy weighted ensembles.

mod bagging;
mod folds;
mod greedy;
pub mod presets;
mod stack;

pub use bagging::{fit_bagged, BaggedModel};
pub use folds::{kfold_assign, FoldAssignment};
pub use greedy::{greedy_weighted_ensemble, SelectionMetric, WeightedEnsemble};
pub use presets::preset;
pub use stack::{
    build_stack_features, fit_stack, member_display_name, MemberConfig, NamedPrediction,
    StackConfig, StackLayerConfig, StackMode, StackedEnsemble,
};
