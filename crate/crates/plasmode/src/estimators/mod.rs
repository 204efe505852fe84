//! Working-model fitters and the competing interference estimators.

mod glm;
mod interference;

pub use glm::{fit_linear, fit_logistic, LinearFit, LogisticFit};
pub use interference::{
    estimate_effects, EffectSeries, EstimateSet, EstimatorConfig, School,
};
