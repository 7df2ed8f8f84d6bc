//! Concrete (Gumbel-softmax) feature selection.
//!
//! Each of the `K` selection neurons holds positive logits `alpha` over the
//! `d` inputs. During training a neuron outputs a convex combination of the
//! inputs with weights `softmax((log alpha + g) / T)`, `g` being fresh Gumbel
//! noise and `T` an exponentially annealed temperature. After training the
//! combination collapses to picking the input with the largest `alpha`.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform draws are clamped this far away from 0 and 1.
pub const UNIFORM_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ConcreteLayer {
    /// `K x d`, stored as `log alpha` so the logits stay positive.
    log_alpha: Array2<f64>,
    t0: f64,
    tb: f64,
    epochs: usize,
    version: u64,
}

/// Serialized form: alphas themselves, plus the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteLayerFile {
    pub selectors: usize,
    pub inputs: usize,
    /// Row-major `selectors x inputs`.
    pub alphas: Vec<f64>,
    /// Exact logits; when present they take precedence over `alphas`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_alphas: Option<Vec<f64>>,
    pub t0: f64,
    pub tb: f64,
    pub epochs: usize,
}

fn check_schedule(t0: f64, tb: f64, epochs: usize) -> Result<()> {
    if !(t0 > tb && tb > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidInput(format!("temperatures must satisfy t0 > tb > 0, got t0={t0}, tb={tb}")));
    }
    if epochs == 0 {
        return Err(Error::InvalidInput("epochs must be positive".into()));
    }
    Ok(())
}

impl PartialEq for ConcreteLayer {
    fn eq(&self, other: &Self) -> bool {
        self.log_alpha == other.log_alpha && self.t0 == other.t0 && self.tb == other.tb && self.epochs == other.epochs
    }
}

impl ConcreteLayer {
    /// `k` selectors over `d` inputs, alphas drawn uniformly from
    /// `[0.9/d, 1.1/d]`.
    pub fn new<R: Rng + ?Sized>(k: usize, d: usize, t0: f64, tb: f64, epochs: usize, rng: &mut R) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidInput("concrete layer needs k >= 1 and d >= 1".into()));
        }
        let dist = Uniform::new_inclusive(0.9 / d as f64, 1.1 / d as f64).expect("valid bounds");
        let alphas = Array2::from_shape_simple_fn((k, d), || dist.sample(rng));
        Self::from_alphas(alphas, t0, tb, epochs)
    }

    pub fn from_alphas(alphas: Array2<f64>, t0: f64, tb: f64, epochs: usize) -> Result<Self> {
        check_schedule(t0, tb, epochs)?;
        if alphas.nrows() == 0 || alphas.ncols() == 0 {
            return Err(Error::InvalidInput("concrete layer needs k >= 1 and d >= 1".into()));
        }
        if alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput("alphas must be positive and finite".into()));
        }
        Ok(Self { log_alpha: alphas.mapv(f64::ln).as_standard_layout().into_owned(), t0, tb, epochs, version: 0 })
    }

    pub fn n_selectors(&self) -> usize {
        self.log_alpha.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.log_alpha.ncols()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tb(&self) -> f64 {
        self.tb
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn alphas(&self) -> Array2<f64> {
        self.log_alpha.mapv(f64::exp)
    }

    pub fn log_alpha(&self) -> &Array2<f64> {
        &self.log_alpha
    }

    /// Flat mutable logits. Invalidates outstanding caches.
    pub fn log_alpha_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        self.log_alpha.as_slice_mut().expect("standard layout")
    }

    pub fn to_file(&self) -> ConcreteLayerFile {
        ConcreteLayerFile {
            selectors: self.n_selectors(),
            inputs: self.n_inputs(),
            alphas: self.alphas().iter().copied().collect(),
            log_alphas: Some(self.log_alpha.iter().copied().collect()),
            t0: self.t0,
            tb: self.tb,
            epochs: self.epochs,
        }
    }

    pub fn from_file(file: ConcreteLayerFile) -> Result<Self> {
        let shape = (file.selectors, file.inputs);
        let alphas = Array2::from_shape_vec(shape, file.alphas).map_err(|e| Error::InvalidInput(format!("alpha shape: {e}")))?;
        let mut layer = Self::from_alphas(alphas, file.t0, file.tb, file.epochs)?;
        if let Some(logits) = file.log_alphas {
            let logits = Array2::from_shape_vec(shape, logits).map_err(|e| Error::InvalidInput(format!("logit shape: {e}")))?;
            if logits.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("concrete logits"));
            }
            layer.log_alpha = logits;
        }
        Ok(layer)
    }
}

/// Inverse Gumbel CDF, `-ln(-ln u)`.
pub fn gumbel_from_uniform(u: f64) -> f64 {
    let u = u.clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP);
    -(-u.ln()).ln()
}

pub fn gumbel_sample<R: Rng + ?Sized>(shape: (usize, usize), rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || gumbel_from_uniform(rng.random::<f64>()))
}

/// `T(b) = T0 (TB / T0)^(b / B)`, exact at both ends.
pub fn temperature(epoch: usize, layer: &ConcreteLayer) -> f64 {
    if epoch == 0 {
        return layer.t0;
    }
    if epoch >= layer.epochs {
        return layer.tb;
    }
    layer.t0 * (layer.tb / layer.t0).powf(epoch as f64 / layer.epochs as f64)
}

#[derive(Debug, Clone)]
pub struct ConcreteCache {
    input: Array2<f64>,
    weights: Array2<f64>,
    temperature: f64,
    version: u64,
}

impl ConcreteCache {
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteGrads {
    pub log_alpha: Array2<f64>,
    pub alpha: Array2<f64>,
    pub input: Array2<f64>,
}

fn softmax_rows(mut z: Array2<f64>) -> Array2<f64> {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    z
}

/// Training-mode forward with caller-provided Gumbel draws (`K x d`).
pub fn concrete_forward_with_gumbel(
    x: ArrayView2<f64>,
    layer: &ConcreteLayer,
    temp: f64,
    gumbel: ArrayView2<f64>,
) -> Result<(Array2<f64>, Array2<f64>, ConcreteCache)> {
    if temp.is_nan() || temp <= 0.0 {
        return Err(Error::InvalidInput(format!("temperature must be positive, got {temp}")));
    }
    if x.ncols() != layer.n_inputs() {
        return Err(Error::DimensionMismatch { expected: layer.n_inputs(), got: x.ncols() });
    }
    if gumbel.dim() != layer.log_alpha.dim() {
        return Err(Error::DimensionMismatch { expected: layer.log_alpha.len(), got: gumbel.len() });
    }
    let weights = softmax_rows((&layer.log_alpha + &gumbel) / temp);
    let out = x.dot(&weights.t());
    let cache = ConcreteCache { input: x.to_owned(), weights: weights.clone(), temperature: temp, version: layer.version };
    Ok((out, weights, cache))
}

/// Training-mode forward with fresh Gumbel noise. Returns the `n x K`
/// output, the `K x d` selection weights and the cache for the backward pass.
pub fn concrete_forward_train<R: Rng + ?Sized>(
    x: ArrayView2<f64>,
    layer: &ConcreteLayer,
    temp: f64,
    rng: &mut R,
) -> Result<(Array2<f64>, Array2<f64>, ConcreteCache)> {
    let g = gumbel_sample(layer.log_alpha.dim(), rng);
    concrete_forward_with_gumbel(x, layer, temp, g.view())
}

/// Gradients through the softmax relaxation with the cached noise.
pub fn concrete_backward(layer: &ConcreteLayer, cache: &ConcreteCache, output_grad: ArrayView2<f64>) -> Result<ConcreteGrads> {
    if cache.version != layer.version {
        return Err(Error::StaleCache);
    }
    if output_grad.dim() != (cache.input.nrows(), layer.n_selectors()) {
        return Err(Error::DimensionMismatch { expected: layer.n_selectors(), got: output_grad.ncols() });
    }
    let input = output_grad.dot(&cache.weights);
    let weight_grad = output_grad.t().dot(&cache.input);
    let inner = (&weight_grad * &cache.weights).sum_axis(Axis(1)).insert_axis(Axis(1));
    let mut log_alpha = (&weight_grad - &inner) * &cache.weights;
    log_alpha /= cache.temperature;
    let mut alpha = log_alpha.clone();
    Zip::from(&mut alpha).and(&layer.log_alpha).for_each(|g, &la| *g /= la.exp());
    Ok(ConcreteGrads { log_alpha, alpha, input })
}

/// Row-wise argmax of the logits; the lowest index wins ties.
pub fn selected_features(layer: &ConcreteLayer) -> Vec<usize> {
    layer
        .log_alpha
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Eval-mode forward: column `i` of the output is input column
/// `argmax_j alpha_ij`.
pub fn concrete_forward_eval(x: ArrayView2<f64>, layer: &ConcreteLayer) -> Result<Array2<f64>> {
    if x.ncols() != layer.n_inputs() {
        return Err(Error::DimensionMismatch { expected: layer.n_inputs(), got: x.ncols() });
    }
    Ok(x.select(Axis(1), &selected_features(layer)))
}
