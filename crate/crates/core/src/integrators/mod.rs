//! Fingerprint models: PCA, autoencoder (AE), Cox-supervised autoencoder
//! (SAE) and concrete-selection supervised autoencoder (CSAE), behind one
//! fit/transform interface.

mod autoencoder;
mod pca;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use autoencoder::{train_concrete, train_dense, Autoencoder, ConcreteAutoencoder, LossParts, TrainingHistory};
pub use pca::{pca_fit, Pca};

use crate::concrete::{selected_features, ConcreteLayer, ConcreteLayerFile};
use crate::data::{FeatureRef, SurvivalLabels};
use crate::error::{Error, Result};
use crate::nn::{DenseNetwork, NetworkFile};

pub const MODEL_FORMAT: &str = "omicsurv.model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pca,
    Ae,
    Sae,
    Csae,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Pca, ModelKind::Ae, ModelKind::Sae, ModelKind::Csae];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Pca => "pca",
            ModelKind::Ae => "ae",
            ModelKind::Sae => "sae",
            ModelKind::Csae => "csae",
        }
    }

    /// Whether fitting needs survival labels.
    pub fn supervised(self) -> bool {
        matches!(self, ModelKind::Sae | ModelKind::Csae)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnsupportedModel(s.to_owned()))
    }
}

/// Architecture and optimizer settings shared by the neural models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_fingerprints: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub dropout: f64,
    pub noise_std: f64,
    pub t0: f64,
    pub tb: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_fingerprints: 128,
            hidden: 512,
            epochs: 256,
            learning_rate: 0.01,
            l2_lambda: 0.001,
            dropout: 0.3,
            noise_std: 0.2,
            t0: 10.0,
            tb: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if self.n_fingerprints == 0 {
            return bad("n_fingerprints must be positive");
        }
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be non-negative");
        }
        if !(self.t0 > self.tb && self.tb > 0.0 && self.t0.is_finite()) {
            return bad("temperatures must satisfy t0 > tb > 0");
        }
        Ok(())
    }
}

/// Learned parameters of a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedState {
    Pca(Pca),
    Autoencoder(Autoencoder),
    Concrete(ConcreteAutoencoder),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintModel {
    pub kind: ModelKind,
    pub config: ModelConfig,
    pub seed: u64,
    state: Option<FittedState>,
}

/// Per-fingerprint feature rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// One list per fingerprint, weights descending (ties by feature order).
    pub fingerprints: Vec<Vec<(FeatureRef, f64)>>,
}

impl ImportanceReport {
    /// Builds rankings from a `d x F` matrix of non-negative scores.
    pub fn from_scores(scores: ArrayView2<f64>, features: &[FeatureRef]) -> Result<Self> {
        if scores.nrows() != features.len() {
            return Err(Error::DimensionMismatch { expected: scores.nrows(), got: features.len() });
        }
        let fingerprints = scores
            .columns()
            .into_iter()
            .map(|col| {
                let mut order: Vec<usize> = (0..col.len()).collect();
                order.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
                order.into_iter().map(|i| (features[i].clone(), col[i])).collect()
            })
            .collect();
        Ok(Self { fingerprints })
    }

    /// The highest-ranked feature of every fingerprint.
    pub fn top_features(&self) -> Vec<&FeatureRef> {
        self.fingerprints.iter().filter_map(|f| f.first().map(|(r, _)| r)).collect()
    }
}

impl FingerprintModel {
    pub fn new(kind: ModelKind, config: ModelConfig, seed: u64) -> Self {
        Self { kind, config, seed, state: None }
    }

    /// Wraps an already fitted state, e.g. a concrete layer with fixed alphas.
    pub fn from_state(kind: ModelKind, config: ModelConfig, seed: u64, state: FittedState) -> Result<Self> {
        let ok = matches!(
            (kind, &state),
            (ModelKind::Pca, FittedState::Pca(_))
                | (ModelKind::Ae, FittedState::Autoencoder(Autoencoder { hazard: None, .. }))
                | (ModelKind::Sae, FittedState::Autoencoder(Autoencoder { hazard: Some(_), .. }))
                | (ModelKind::Csae, FittedState::Concrete(_))
        );
        if !ok {
            return Err(Error::InvalidInput(format!("fitted state does not match model kind {kind}")));
        }
        Ok(Self { kind, config, seed, state: Some(state) })
    }

    pub fn state(&self) -> Option<&FittedState> {
        self.state.as_ref()
    }

    pub fn is_fitted(&self) -> bool {
        self.state.is_some()
    }

    /// Fits on training rows only. `labels` are required for the supervised
    /// kinds and ignored otherwise.
    pub fn fit(&mut self, x: ArrayView2<f64>, labels: Option<&SurvivalLabels>) -> Result<()> {
        let state = match self.kind {
            ModelKind::Pca => FittedState::Pca(pca_fit(x, self.config.n_fingerprints)?),
            ModelKind::Ae => FittedState::Autoencoder(train_dense(x, None, &self.config, self.seed)?),
            ModelKind::Sae => {
                let labels = labels.ok_or_else(|| Error::InvalidInput("sae needs survival labels".into()))?;
                FittedState::Autoencoder(train_dense(x, Some(labels), &self.config, self.seed)?)
            }
            ModelKind::Csae => {
                let labels = labels.ok_or_else(|| Error::InvalidInput("csae needs survival labels".into()))?;
                FittedState::Concrete(train_concrete(x, labels, &self.config, self.seed)?)
            }
        };
        self.state = Some(state);
        Ok(())
    }

    fn fitted(&self) -> Result<&FittedState> {
        self.state.as_ref().ok_or(Error::NotFitted)
    }

    pub fn input_dim(&self) -> Result<usize> {
        Ok(match self.fitted()? {
            FittedState::Pca(p) => p.mean.len(),
            FittedState::Autoencoder(a) => a.encoder.input_dim(),
            FittedState::Concrete(c) => c.selector.n_inputs(),
        })
    }

    /// Fingerprint width; for PCA this may be below the configured count.
    pub fn n_fingerprints(&self) -> Result<usize> {
        Ok(match self.fitted()? {
            FittedState::Pca(p) => p.n_components(),
            FittedState::Autoencoder(a) => a.encoder.output_dim(),
            FittedState::Concrete(c) => c.selector.n_selectors(),
        })
    }

    /// Deterministic eval-mode fingerprints, `n x F`.
    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        match self.fitted()? {
            FittedState::Pca(p) => p.transform(x),
            FittedState::Autoencoder(a) => a.encode(x),
            FittedState::Concrete(c) => c.encode(x),
        }
    }

    /// Training-loss history of the neural kinds.
    pub fn history(&self) -> Option<&TrainingHistory> {
        match self.state.as_ref()? {
            FittedState::Pca(_) => None,
            FittedState::Autoencoder(a) => Some(&a.history),
            FittedState::Concrete(c) => Some(&c.history),
        }
    }

    /// Input columns picked by a CSAE, one per fingerprint.
    pub fn selected_features(&self) -> Option<Vec<usize>> {
        match self.state.as_ref()? {
            FittedState::Concrete(c) => Some(selected_features(&c.selector)),
            _ => None,
        }
    }

    /// `d x F` attribution scores: absolute loadings for PCA, the absolute
    /// product of the encoder weight matrices for the dense autoencoders and
    /// a single 1 on the chosen input for the CSAE.
    pub fn importance_scores(&self) -> Result<Array2<f64>> {
        Ok(match self.fitted()? {
            FittedState::Pca(p) => p.components.t().mapv(f64::abs),
            FittedState::Autoencoder(a) => a.encoder.path_product(a.encoder.layers().len()).mapv(f64::abs),
            FittedState::Concrete(c) => {
                let mut s = Array2::zeros((c.selector.n_inputs(), c.selector.n_selectors()));
                for (k, j) in selected_features(&c.selector).into_iter().enumerate() {
                    s[[j, k]] = 1.0;
                }
                s
            }
        })
    }

    pub fn importance(&self, features: &[FeatureRef]) -> Result<ImportanceReport> {
        ImportanceReport::from_scores(self.importance_scores()?.view(), features)
    }

    pub fn to_json(&self) -> Result<String> {
        let state = self.fitted()?;
        let mut file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            kind: self.kind,
            config: self.config,
            seed: self.seed,
            pca: None,
            encoder: None,
            selector: None,
            decoder: None,
            hazard: None,
            history: None,
            features: None,
        };
        match state {
            FittedState::Pca(p) => file.pca = Some(p.clone()),
            FittedState::Autoencoder(a) => {
                file.encoder = Some(NetworkFile::from(&a.encoder));
                file.decoder = Some(NetworkFile::from(&a.decoder));
                file.hazard = a.hazard.as_ref().map(NetworkFile::from);
                file.history = Some(a.history.clone());
            }
            FittedState::Concrete(c) => {
                file.selector = Some(c.selector.to_file());
                file.decoder = Some(NetworkFile::from(&c.decoder));
                file.hazard = Some(NetworkFile::from(&c.hazard));
                file.history = Some(c.history.clone());
            }
        }
        Ok(serde_json::to_string(&file)?)
    }

    /// Serializes together with the feature table the columns refer to.
    pub fn to_json_with_features(&self, features: &[FeatureRef]) -> Result<String> {
        let mut file: ModelFile = serde_json::from_str(&self.to_json()?)?;
        file.features = Some(features.to_vec());
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(Self::from_json_with_features(s)?.0)
    }

    pub fn from_json_with_features(s: &str) -> Result<(Self, Option<Vec<FeatureRef>>)> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!("unsupported model format {} v{}", file.format, file.version)));
        }
        let missing = |what: &str| Error::InvalidInput(format!("model file lacks {what}"));
        let net = |n: Option<NetworkFile>, what: &str| -> Result<DenseNetwork> { n.ok_or_else(|| missing(what))?.try_into() };
        let state = match file.kind {
            ModelKind::Pca => FittedState::Pca(file.pca.ok_or_else(|| missing("pca"))?),
            ModelKind::Ae | ModelKind::Sae => FittedState::Autoencoder(Autoencoder {
                encoder: net(file.encoder, "encoder")?,
                decoder: net(file.decoder, "decoder")?,
                hazard: file.hazard.map(DenseNetwork::try_from).transpose()?,
                history: file.history.unwrap_or_default(),
            }),
            ModelKind::Csae => FittedState::Concrete(ConcreteAutoencoder {
                selector: ConcreteLayer::from_file(file.selector.ok_or_else(|| missing("selector"))?)?,
                decoder: net(file.decoder, "decoder")?,
                hazard: net(file.hazard, "hazard")?,
                history: file.history.unwrap_or_default(),
            }),
        };
        Ok((Self::from_state(file.kind, file.config, file.seed, state)?, file.features))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    kind: ModelKind,
    config: ModelConfig,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pca: Option<Pca>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoder: Option<NetworkFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selector: Option<ConcreteLayerFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decoder: Option<NetworkFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hazard: Option<NetworkFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    history: Option<TrainingHistory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<FeatureRef>>,
}

/// Fits a plain autoencoder.
pub fn ae_fit(x: ArrayView2<f64>, config: &ModelConfig, seed: u64) -> Result<FingerprintModel> {
    let mut m = FingerprintModel::new(ModelKind::Ae, *config, seed);
    m.fit(x, None)?;
    Ok(m)
}

/// Fits a Cox-supervised autoencoder.
pub fn sae_fit(x: ArrayView2<f64>, labels: &SurvivalLabels, config: &ModelConfig, seed: u64) -> Result<FingerprintModel> {
    let mut m = FingerprintModel::new(ModelKind::Sae, *config, seed);
    m.fit(x, Some(labels))?;
    Ok(m)
}

/// Fits a concrete-selection supervised autoencoder.
pub fn csae_fit(x: ArrayView2<f64>, labels: &SurvivalLabels, config: &ModelConfig, seed: u64) -> Result<FingerprintModel> {
    let mut m = FingerprintModel::new(ModelKind::Csae, *config, seed);
    m.fit(x, Some(labels))?;
    Ok(m)
}
