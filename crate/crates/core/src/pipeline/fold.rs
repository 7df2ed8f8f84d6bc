use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_fit, KmeansModel};
use super::PipelineConfig;
use crate::data::{concat_selected, variance_topk, FeatureRef, MultiOmicsDataset, Scaler};
use crate::error::{Error, Result};
use crate::integrators::{FingerprintModel, ModelKind};
use crate::seed::derive_seed;
use crate::survival::{concordance_index, cox_fit_with_fallback, logrank_test, univariate_cox_select, CoxModel};

const MODEL_STREAM: u64 = 1;
const KMEANS_STREAM: u64 = 2;

/// Outcome of one train/test split. Exactly one of `c_index` and `failure`
/// is set; `logrank_p` is `None` when every test sample lands in one
/// cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat_index: usize,
    pub fold_index: usize,
    pub c_index: Option<f64>,
    pub logrank_p: Option<f64>,
    /// Fingerprint columns kept by the univariate Cox screen.
    pub selected_fingerprints: Vec<usize>,
    /// Fingerprint width the model produced.
    pub n_fingerprints: usize,
    pub test_indices: Vec<usize>,
    /// Per test sample: 1 for the high-risk cluster, 0 otherwise.
    pub cluster_labels: Vec<u8>,
    /// Multivariable Cox linear predictor of every test sample.
    pub test_risk: Vec<f64>,
    pub failure: Option<String>,
}

impl FoldResult {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    fn failed(test_idx: &[usize], error: &Error) -> Self {
        Self {
            repeat_index: 0,
            fold_index: 0,
            c_index: None,
            logrank_p: None,
            selected_fingerprints: Vec::new(),
            n_fingerprints: 0,
            test_indices: test_idx.to_vec(),
            cluster_labels: Vec::new(),
            test_risk: Vec::new(),
            failure: Some(error.to_string()),
        }
    }
}

/// Everything fitted on the training rows of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldArtifacts {
    /// Step A: kept column indices per layer.
    pub layer_selection: Vec<Vec<usize>>,
    pub features: Vec<FeatureRef>,
    /// Step B.
    pub scaler: Scaler,
    /// Step C.
    pub model: FingerprintModel,
    /// Step D.
    pub selected_fingerprints: Vec<usize>,
    /// Step E, with cluster ids as fitted (before risk relabeling).
    pub kmeans: KmeansModel,
    /// Which fitted cluster is labeled high risk.
    pub high_risk_cluster: usize,
    /// Step F.
    pub cox: CoxModel,
}

fn check_indices(n: usize, train: &[usize], test: &[usize]) -> Result<()> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidInput("train and test sets must be non-empty".into()));
    }
    let mut seen = vec![false; n];
    for &i in train.iter().chain(test) {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, width: n });
        }
        if seen[i] {
            return Err(Error::InvalidInput(format!("sample {i} appears twice across train/test")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Runs steps A to F on one split, returning the fold metrics together with
/// every train-side fitted artifact. Only training rows are used for
/// fitting; test rows are only ever transformed.
pub fn run_fold_detailed(
    dataset: &MultiOmicsDataset,
    train_idx: &[usize],
    test_idx: &[usize],
    kind: ModelKind,
    config: &PipelineConfig,
    seed: u64,
) -> Result<(FoldResult, FoldArtifacts)> {
    config.validate()?;
    check_indices(dataset.n_samples(), train_idx, test_idx)?;
    let train_labels = dataset.survival().select(train_idx);
    let test_labels = dataset.survival().select(test_idx);
    if train_labels.n_events() == 0 {
        return Err(Error::NoEvents);
    }

    // A: variance filter per layer
    let layer_selection: Vec<Vec<usize>> = dataset
        .layers()
        .iter()
        .map(|layer| {
            if config.selection_on_train_only {
                variance_topk(layer.values().select(Axis(0), train_idx).view(), config.k_per_layer)
            } else {
                variance_topk(layer.values().view(), config.k_per_layer)
            }
        })
        .collect();
    let (x_all, features) = concat_selected(dataset, &layer_selection)?;
    let x_train = x_all.select(Axis(0), train_idx);
    let x_test = x_all.select(Axis(0), test_idx);

    // B: z-scoring with training statistics
    let scaler = Scaler::fit(x_train.view())?;
    let x_train = scaler.apply(x_train.view())?;
    let x_test = scaler.apply(x_test.view())?;

    // C: fingerprints
    let mut model = FingerprintModel::new(kind, config.model_config(), derive_seed(seed, &[MODEL_STREAM]));
    model.fit(x_train.view(), Some(&train_labels))?;
    let z_train = model.transform(x_train.view())?;
    let z_test = model.transform(x_test.view())?;
    if z_train.iter().chain(z_test.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fingerprints"));
    }

    // D: univariate Cox screen
    let selected = univariate_cox_select(z_train.view(), &train_labels, config.select_alpha, config.cox_fallback_penalty);
    let s_train: Array2<f64> = z_train.select(Axis(1), &selected);
    let s_test: Array2<f64> = z_test.select(Axis(1), &selected);

    // F: multivariable Cox on the screened fingerprints
    let cox = cox_fit_with_fallback(s_train.view(), &train_labels, config.cox_fallback_penalty)?;
    let train_risk = cox.predict(s_train.view())?;
    let test_risk = cox.predict(s_test.view())?;
    let c_index = concordance_index(&test_risk, &test_labels)?;

    // E: two clusters fitted on train, labeled by mean train risk
    let kmeans = kmeans_fit(s_train.view(), &config.kmeans, derive_seed(seed, &[KMEANS_STREAM]))?;
    let mut risk_sum = vec![0.0; config.kmeans.k];
    let mut count = vec![0usize; config.kmeans.k];
    for (&c, &r) in kmeans.labels.iter().zip(&train_risk) {
        risk_sum[c] += r;
        count[c] += 1;
    }
    let mean_risk: Vec<f64> =
        risk_sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NEG_INFINITY }).collect();
    let high_risk_cluster =
        (0..mean_risk.len()).max_by(|&a, &b| mean_risk[a].total_cmp(&mean_risk[b]).then(b.cmp(&a))).expect("k >= 1");
    let cluster_labels: Vec<u8> = kmeans.assign(s_test.view())?.into_iter().map(|c| u8::from(c == high_risk_cluster)).collect();
    let groups: Vec<bool> = cluster_labels.iter().map(|&l| l == 1).collect();
    let logrank_p = match logrank_test(&test_labels, &groups) {
        Ok(r) => Some(r.p_value),
        Err(Error::EmptyGroup) => None,
        Err(e) => return Err(e),
    };

    let result = FoldResult {
        repeat_index: 0,
        fold_index: 0,
        c_index: Some(c_index),
        logrank_p,
        selected_fingerprints: selected.clone(),
        n_fingerprints: z_train.ncols(),
        test_indices: test_idx.to_vec(),
        cluster_labels,
        test_risk,
        failure: None,
    };
    let artifacts = FoldArtifacts {
        layer_selection,
        features,
        scaler,
        model,
        selected_fingerprints: selected,
        kmeans,
        high_risk_cluster,
        cox,
    };
    Ok((result, artifacts))
}

/// Steps A to F on one split. Any error becomes a failed fold.
pub fn run_fold(
    dataset: &MultiOmicsDataset,
    train_idx: &[usize],
    test_idx: &[usize],
    kind: ModelKind,
    config: &PipelineConfig,
    seed: u64,
) -> FoldResult {
    match run_fold_detailed(dataset, train_idx, test_idx, kind, config, seed) {
        Ok((result, _)) => result,
        Err(e) => FoldResult::failed(test_idx, &e),
    }
}
