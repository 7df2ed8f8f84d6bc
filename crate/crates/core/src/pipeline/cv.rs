use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fold::{run_fold, FoldResult};
use super::folds::make_folds;
use super::PipelineConfig;
use crate::data::MultiOmicsDataset;
use crate::error::{Error, Result};
use crate::integrators::ModelKind;
use crate::seed::derive_seed;

/// Environment variable holding the number of concurrent folds.
pub const WORKERS_ENV: &str = "OMICSURV_WORKERS";

/// Worker count from [`WORKERS_ENV`]; `None` leaves the choice to rayon.
pub fn worker_count() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// Free-form dataset label used to group reports when comparing.
    pub dataset: String,
    pub model: ModelKind,
    pub config: PipelineConfig,
    /// Sorted by (repeat, fold).
    pub folds: Vec<FoldResult>,
    /// Mean over successful folds.
    pub mean_c_index: f64,
    /// Sample standard deviation over successful folds (0 for a single one).
    pub std_c_index: f64,
    pub n_failed: usize,
}

impl CvReport {
    /// Assembles a report from fold results and computes the summary.
    pub fn new(dataset: impl Into<String>, model: ModelKind, config: PipelineConfig, mut folds: Vec<FoldResult>) -> Result<Self> {
        folds.sort_by_key(|f| (f.repeat_index, f.fold_index));
        if folds.windows(2).any(|w| (w[0].repeat_index, w[0].fold_index) == (w[1].repeat_index, w[1].fold_index)) {
            return Err(Error::InvalidInput("duplicate (repeat, fold) key".into()));
        }
        let scores: Vec<f64> = folds.iter().filter_map(|f| f.c_index).collect();
        if scores.is_empty() {
            return Err(Error::AllFoldsFailed);
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let std =
            if scores.len() > 1 { (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Ok(Self {
            dataset: dataset.into(),
            model,
            config,
            n_failed: folds.len() - scores.len(),
            folds,
            mean_c_index: mean,
            std_c_index: std,
        })
    }

    /// `(repeat, fold)` keys of the successful folds.
    pub fn success_keys(&self) -> Vec<(usize, usize)> {
        self.folds.iter().filter(|f| f.succeeded()).map(|f| (f.repeat_index, f.fold_index)).collect()
    }

    pub fn c_index_at(&self, key: (usize, usize)) -> Option<f64> {
        self.folds.binary_search_by_key(&key, |f| (f.repeat_index, f.fold_index)).ok().and_then(|i| self.folds[i].c_index)
    }
}

/// Repeated k-fold cross-validation. Splits depend only on the sample count
/// and `master_seed`, so every model sees the same folds; each fold's model
/// seed derives from `(master_seed, repeat, fold)`. Folds run concurrently
/// on [`worker_count`] threads.
pub fn cross_validate(dataset: &MultiOmicsDataset, kind: ModelKind, config: &PipelineConfig) -> Result<CvReport> {
    config.validate()?;
    let splits = make_folds(dataset.n_samples(), config.folds, config.repeats, config.master_seed)?;
    let tasks: Vec<(usize, usize)> = (0..config.repeats).flat_map(|r| (0..config.folds).map(move |f| (r, f))).collect();
    let run = |&(r, f): &(usize, usize)| {
        let split = &splits[r][f];
        let seed = derive_seed(config.master_seed, &[r as u64, f as u64]);
        let mut result = run_fold(dataset, &split.train, &split.test, kind, config, seed);
        result.repeat_index = r;
        result.fold_index = f;
        result
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count() {
        builder = builder.num_threads(n);
    }
    let folds: Vec<FoldResult> = match builder.build() {
        Ok(pool) => pool.install(|| tasks.par_iter().map(run).collect()),
        Err(_) => tasks.iter().map(run).collect(),
    };
    CvReport::new("", kind, *config, folds)
}
