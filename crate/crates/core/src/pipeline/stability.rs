use std::collections::BTreeMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::data::{concat_selected, variance_topk, FeatureRef, MultiOmicsDataset, Scaler, SurvivalLabels};
use crate::error::{Error, Result};
use crate::integrators::{FingerprintModel, ModelKind};
use crate::seed::derive_seed;

const STABILITY_STREAM: u64 = 0x57AB;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub runs_requested: usize,
    pub runs_succeeded: usize,
    pub failures: Vec<String>,
    /// Layer name and width after variance filtering, in dataset order.
    pub layers: Vec<(String, usize)>,
    /// Top-1 features per layer, summed over runs and fingerprints.
    pub layer_counts: Vec<usize>,
    /// `layer_counts` divided by the layer width.
    pub layer_counts_normalized: Vec<f64>,
    /// Number of runs in which each feature was the top feature of at least
    /// one fingerprint; descending, ties in input order.
    pub feature_frequency: Vec<(FeatureRef, usize)>,
}

/// Refits a model `runs` times on the whole variance-filtered and z-scored
/// dataset, with `fit(x, labels, seed)` doing the fitting, and tallies the
/// top-ranked feature of every fingerprint.
pub fn stability_analysis_with<F>(
    dataset: &MultiOmicsDataset,
    runs: usize,
    config: &PipelineConfig,
    mut fit: F,
) -> Result<StabilityReport>
where
    F: FnMut(ArrayView2<f64>, &SurvivalLabels, u64) -> Result<FingerprintModel>,
{
    if runs == 0 {
        return Err(Error::InvalidInput("stability analysis needs at least one run".into()));
    }
    let selection: Vec<Vec<usize>> =
        dataset.layers().iter().map(|l| variance_topk(l.values().view(), config.k_per_layer)).collect();
    let (x, features) = concat_selected(dataset, &selection)?;
    let x = Scaler::fit(x.view())?.apply(x.view())?;
    let layers: Vec<(String, usize)> =
        dataset.layers().iter().zip(&selection).map(|(l, s)| (l.name().to_owned(), s.len())).collect();
    let layer_pos: BTreeMap<&str, usize> = layers.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect();

    let mut layer_counts = vec![0usize; layers.len()];
    let mut appearances = vec![0usize; features.len()];
    let mut failures = Vec::new();
    let mut succeeded = 0;
    for run in 0..runs {
        let seed = derive_seed(config.master_seed, &[STABILITY_STREAM, run as u64]);
        let report = fit(x.view(), dataset.survival(), seed).and_then(|m| m.importance(&features));
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("run {run}: {e}"));
                continue;
            }
        };
        succeeded += 1;
        let mut seen = vec![false; features.len()];
        for top in report.top_features() {
            layer_counts[layer_pos[top.layer_name.as_str()]] += 1;
            seen[top.global_index] = true;
        }
        for (count, hit) in appearances.iter_mut().zip(seen) {
            *count += usize::from(hit);
        }
    }
    if succeeded == 0 {
        return Err(Error::AllFoldsFailed);
    }
    let layer_counts_normalized =
        layer_counts.iter().zip(&layers).map(|(&c, (_, w))| if *w > 0 { c as f64 / *w as f64 } else { 0.0 }).collect();
    let mut feature_frequency: Vec<(FeatureRef, usize)> = features.into_iter().zip(appearances).filter(|(_, c)| *c > 0).collect();
    feature_frequency.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.global_index.cmp(&b.0.global_index)));
    Ok(StabilityReport {
        runs_requested: runs,
        runs_succeeded: succeeded,
        failures,
        layers,
        layer_counts,
        layer_counts_normalized,
        feature_frequency,
    })
}

/// [`stability_analysis_with`] using the configured model of `kind`.
pub fn stability_analysis(
    dataset: &MultiOmicsDataset,
    kind: ModelKind,
    runs: usize,
    config: &PipelineConfig,
) -> Result<StabilityReport> {
    config.validate()?;
    let model_config = config.model_config();
    stability_analysis_with(dataset, runs, config, |x, labels, seed| {
        let mut m = FingerprintModel::new(kind, model_config, seed);
        m.fit(x, Some(labels))?;
        Ok(m)
    })
}
