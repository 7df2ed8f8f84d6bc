use std::path::Path;

use ndarray::Array2;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{write_dataset, MultiOmicsDataset, OmicsLayer, SurvivalLabels};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

/// Time scale of the generated survival times (days per unit hazard).
const TIME_SCALE: f64 = 365.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFeature {
    pub layer: String,
    pub index: usize,
    pub weight: f64,
}

/// Recipe for a synthetic cohort with a known log-hazard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub layers: Vec<(String, usize)>,
    pub planted: Vec<PlantedFeature>,
    /// Target fraction of censored samples, in `[0, 1)`.
    pub censoring_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::InvalidInput("synthetic cohort needs at least 2 samples".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::InvalidInput("synthetic cohort needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&self.censoring_rate) {
            return Err(Error::InvalidInput(format!("censoring_rate must lie in [0, 1), got {}", self.censoring_rate)));
        }
        for (i, (name, width)) in self.layers.iter().enumerate() {
            if *width == 0 || name.is_empty() {
                return Err(Error::InvalidInput(format!("layer '{name}' needs a name and at least one feature")));
            }
            if self.layers[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidInput(format!("layer '{name}' listed twice")));
            }
        }
        for p in &self.planted {
            let width = self
                .layers
                .iter()
                .find(|(n, _)| *n == p.layer)
                .map(|(_, w)| *w)
                .ok_or_else(|| Error::InvalidInput(format!("planted feature refers to unknown layer '{}'", p.layer)))?;
            if p.index >= width {
                return Err(Error::IndexOutOfRange { index: p.index, width });
            }
            if !p.weight.is_finite() {
                return Err(Error::NonFinite("planted weight"));
            }
        }
        Ok(())
    }
}

/// Rate of exponential censoring whose expected censored fraction over
/// hazards `h` equals `target`.
fn censoring_rate_for(hazards: &[f64], target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let frac = |rate: f64| hazards.iter().map(|h| rate / (rate + h)).sum::<f64>() / hazards.len() as f64;
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frac(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Standard normal features, exponential survival with rate
/// `exp(sum of planted weight * feature)` and independent exponential
/// censoring calibrated to the requested rate.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiOmicsDataset> {
    spec.validate()?;
    let n = spec.n_samples;
    let mut feature_rng = rng_from_seed(derive_seed(spec.seed, &[1]));
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut log_hazard = vec![0.0; n];
    for (name, width) in &spec.layers {
        let values = Array2::from_shape_simple_fn((n, *width), || StandardNormal.sample(&mut feature_rng));
        for p in spec.planted.iter().filter(|p| p.layer == *name) {
            for (lh, v) in log_hazard.iter_mut().zip(values.column(p.index)) {
                *lh += p.weight * v;
            }
        }
        let names = (0..*width).map(|i| format!("{name}_f{i}")).collect();
        layers.push(OmicsLayer::new(name.clone(), names, values)?);
    }

    let hazards: Vec<f64> = log_hazard.iter().map(|lh| lh.exp()).collect();
    let c_rate = censoring_rate_for(&hazards, spec.censoring_rate);
    let mut time_rng = rng_from_seed(derive_seed(spec.seed, &[2]));
    let mut time = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    for h in &hazards {
        let e1: f64 = Exp1.sample(&mut time_rng);
        let e2: f64 = Exp1.sample(&mut time_rng);
        let t_event = e1 / h;
        let t_censor = if c_rate > 0.0 { e2 / c_rate } else { f64::INFINITY };
        event.push(t_event <= t_censor);
        time.push(t_event.min(t_censor) * TIME_SCALE);
    }
    let digits = n.to_string().len().max(4);
    let ids = (1..=n).map(|i| format!("S{i:0digits$}")).collect();
    MultiOmicsDataset::new(ids, layers, SurvivalLabels::new(time, event)?)
}

/// Generates the cohort and writes it in the TSV layout read by
/// [`crate::data::load_dataset`].
pub fn write_synthetic(spec: &SyntheticSpec, dir: impl AsRef<Path>) -> Result<MultiOmicsDataset> {
    let ds = generate_synthetic(spec)?;
    write_dataset(&ds, dir)?;
    Ok(ds)
}
