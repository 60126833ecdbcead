//! Stacked ensemble learning for detecting airborne tracer leaks and predicting
//! their intensity from gridded meteorological data.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`tabular`]: datasets, CSV ingestion and preprocessing (labeling,
//!   undersampling, constant-column pruning, splitting, standardization).
//! * [`plume`]: a deterministic synthetic scenario generator (Gaussian plume
//!   over smooth meteorological fields).
//! * [`learners`]: CART trees, random forests, extra trees, gradient boosting
//!   and k-nearest neighbours, all written from scratch.
//! * [`ensemble`]: k-fold bagging with out-of-fold predictions, multi-layer
//!   stacking and greedy weighted-ensemble selection.
//! * [`metrics`]: accuracy, F1, MCC, ROC AUC, precision, recall, R², MSE, RMSE.
//! * [`tuning`]: Hyperband scheduling with a kernel-density (BOHB-style)
//!   configuration sampler.
//! * [`pipeline`]: end-to-end commands (generate, train, evaluate, predict,
//!   tune, report) and model artifacts.

pub mod ensemble;
pub mod error;
pub mod learners;
pub mod metrics;
pub mod pipeline;
pub mod plume;
pub mod rng;
pub mod tabular;
pub mod tuning;


pub use error::{Error, Result};
