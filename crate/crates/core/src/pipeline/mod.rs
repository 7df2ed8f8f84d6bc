//! Cross-validated evaluation: variance filtering, train-only scaling,
//! fingerprint fitting, univariate Cox screening, two-cluster KMeans with a
//! logrank test and a multivariable Cox model scored by C-index.

mod compare;
mod cv;
mod fold;
mod folds;
mod kmeans;
mod stability;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use compare::{compare_models, render_rank_table, student_t_test, Comparison, ModelSummary, PairwiseTest};
pub use cv::{cross_validate, worker_count, CvReport, WORKERS_ENV};
pub use fold::{run_fold, run_fold_detailed, FoldArtifacts, FoldResult};
pub use folds::{make_folds, Fold};
pub use kmeans::{kmeans_assign, kmeans_fit, KmeansModel};
pub use stability::{stability_analysis, stability_analysis_with, StabilityReport};

use crate::error::{Error, Result};
use crate::integrators::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmeansConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self { k: 2, n_init: 10, max_iter: 300, tol: 0.001 }
    }
}

/// Every knob of the evaluation. Missing keys in a config file take their
/// defaults; unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub k_per_layer: usize,
    pub n_fingerprints: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub dropout: f64,
    pub noise_std: f64,
    pub t0: f64,
    pub tb: f64,
    pub select_alpha: f64,
    pub cox_fallback_penalty: f64,
    pub kmeans: KmeansConfig,
    pub folds: usize,
    pub repeats: usize,
    pub master_seed: u64,
    /// Variance filtering on training rows only (otherwise on all rows).
    pub selection_on_train_only: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            k_per_layer: 1000,
            n_fingerprints: m.n_fingerprints,
            hidden: m.hidden,
            epochs: m.epochs,
            learning_rate: m.learning_rate,
            l2_lambda: m.l2_lambda,
            dropout: m.dropout,
            noise_std: m.noise_std,
            t0: m.t0,
            tb: m.tb,
            select_alpha: 0.05,
            cox_fallback_penalty: 0.1,
            kmeans: KmeansConfig::default(),
            folds: 10,
            repeats: 10,
            master_seed: 0,
            selection_on_train_only: true,
        }
    }
}

impl PipelineConfig {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            n_fingerprints: self.n_fingerprints,
            hidden: self.hidden,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            l2_lambda: self.l2_lambda,
            dropout: self.dropout,
            noise_std: self.noise_std,
            t0: self.t0,
            tb: self.tb,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config().validate()?;
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if self.k_per_layer == 0 {
            return bad("k_per_layer must be positive");
        }
        if !(self.select_alpha > 0.0 && self.select_alpha < 1.0) {
            return bad("select_alpha must lie in (0, 1)");
        }
        if !(self.cox_fallback_penalty > 0.0 && self.cox_fallback_penalty.is_finite()) {
            return bad("cox_fallback_penalty must be positive");
        }
        if self.kmeans.k != 2 {
            return bad("kmeans.k must be 2");
        }
        if self.kmeans.n_init == 0 || self.kmeans.max_iter == 0 {
            return bad("kmeans.n_init and kmeans.max_iter must be positive");
        }
        if !(self.kmeans.tol >= 0.0 && self.kmeans.tol.is_finite()) {
            return bad("kmeans.tol must be non-negative");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.repeats == 0 {
            return bad("repeats must be positive");
        }
        Ok(())
    }

    /// Parses and validates a JSON config. Unknown keys are named in the error.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
