use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Regularizing noise used only in [`Mode::Train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainNoise {
    pub dropout_rate: f64,
    pub noise_std: f64,
}

impl TrainNoise {
    pub const NONE: TrainNoise = TrainNoise { dropout_rate: 0.0, noise_std: 0.0 };

    pub fn new(dropout_rate: f64, noise_std: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidInput(format!("dropout rate must be in [0, 1), got {dropout_rate}")));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::InvalidInput(format!("noise std must be nonnegative, got {noise_std}")));
        }
        Ok(Self { dropout_rate, noise_std })
    }
}

/// `y = act(x W + b)` with `W` stored as `inputs x outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        Self {
            weight: Array2::from_shape_simple_fn((inputs, outputs), || dist.sample(rng)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct DenseNetwork {
    layers: Vec<DenseLayer>,
    version: u64,
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
    version: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrads {
    pub layers: Vec<LayerGrads>,
    pub input: Array2<f64>,
}

impl NetworkGrads {
    /// Flat views in the same order as [`DenseNetwork::parameters_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|g| [g.weight.as_slice().expect("standard layout"), g.bias.as_slice().expect("standard layout")])
            .collect()
    }

    /// Adds `2 * lambda * W` to every weight gradient.
    pub fn add_l2(&mut self, net: &DenseNetwork, lambda: f64) {
        for (g, layer) in self.layers.iter_mut().zip(net.layers()) {
            g.weight.scaled_add(2.0 * lambda, &layer.weight);
        }
    }
}

/// Equality of layers; the cache version is bookkeeping only.
impl PartialEq for DenseNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl DenseNetwork {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::DimensionMismatch { expected: pair[0].outputs(), got: pair[1].inputs() });
            }
        }
        for l in &layers {
            if l.bias.len() != l.outputs() {
                return Err(Error::DimensionMismatch { expected: l.outputs(), got: l.bias.len() });
            }
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("network weights"));
            }
        }
        // parameter slices are handed out by `parameters_mut`
        let layers = layers
            .into_iter()
            .map(|l| DenseLayer {
                weight: l.weight.as_standard_layout().into_owned(),
                bias: l.bias.as_standard_layout().into_owned(),
                activation: l.activation,
            })
            .collect();
        Ok(Self { layers, version: 0 })
    }

    /// A multilayer perceptron over `sizes` (input first) with `hidden`
    /// activations between layers and `output` on the last one.
    pub fn mlp<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidInput("mlp needs at least input and output sizes".into()));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| DenseLayer::glorot(w[0], w[1], if i == last { output } else { hidden }, rng))
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Forward pass. In train mode Gaussian noise is added to the input and
    /// inverted dropout follows every hidden activation; eval mode is
    /// deterministic.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<f64>,
        mode: Mode,
        noise: &TrainNoise,
        rng: &mut R,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        let train = mode == Mode::Train;
        let mut h = x.to_owned();
        if train && noise.noise_std > 0.0 {
            h.mapv_inplace(|v| {
                let z: f64 = StandardNormal.sample(rng);
                v + noise.noise_std * z
            });
        }
        let n_layers = self.layers.len();
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(n_layers),
            pre_activations: Vec::with_capacity(n_layers),
            masks: Vec::with_capacity(n_layers),
            version: self.version,
        };
        for (i, layer) in self.layers.iter().enumerate() {
            let pre = h.dot(&layer.weight) + &layer.bias;
            let mut out = pre.mapv(|v| layer.activation.apply(v));
            let mask = if train && noise.dropout_rate > 0.0 && i + 1 < n_layers {
                let keep = 1.0 - noise.dropout_rate;
                let scale = 1.0 / keep;
                let mask = Array2::from_shape_simple_fn(out.raw_dim(), || if rng.random::<f64>() < keep { scale } else { 0.0 });
                out *= &mask;
                Some(mask)
            } else {
                None
            };
            cache.inputs.push(h);
            cache.pre_activations.push(pre);
            cache.masks.push(mask);
            h = out;
        }
        Ok((h, cache))
    }

    /// Deterministic eval-mode output.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        let mut h = x.to_owned();
        for layer in &self.layers {
            h = (h.dot(&layer.weight) + &layer.bias).mapv(|v| layer.activation.apply(v));
        }
        Ok(h)
    }

    /// Exact gradients of the forward map recorded in `cache`, reusing its
    /// dropout masks.
    pub fn backward(&self, cache: &ForwardCache, output_grad: ArrayView2<f64>) -> Result<NetworkGrads> {
        if cache.version != self.version || cache.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        let expected = cache.pre_activations.last().map(|a| a.dim()).unwrap_or_default();
        if output_grad.dim() != expected {
            return Err(Error::DimensionMismatch { expected: expected.1, got: output_grad.ncols() });
        }
        let mut g = output_grad.to_owned();
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if let Some(mask) = &cache.masks[i] {
                g *= mask;
            }
            Zip::from(&mut g).and(&cache.pre_activations[i]).for_each(|gv, &pre| *gv *= layer.activation.derivative(pre));
            let weight = cache.inputs[i].t().dot(&g);
            let bias = g.sum_axis(Axis(0));
            g = g.dot(&layer.weight.t());
            grads.push(LayerGrads { weight, bias });
        }
        grads.reverse();
        Ok(NetworkGrads { layers: grads, input: g })
    }

    /// Mutable flat views of every weight then bias, layer by layer. Taking
    /// them invalidates outstanding forward caches.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_slice_mut().expect("standard layout"), l.bias.as_slice_mut().expect("standard layout")])
            .collect()
    }

    pub fn parameter_sizes(&self) -> Vec<usize> {
        self.layers.iter().flat_map(|l| [l.weight.len(), l.bias.len()]).collect()
    }

    pub fn weights_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Product of the weight matrices of the first `n_layers` layers.
    pub fn path_product(&self, n_layers: usize) -> Array2<f64> {
        let mut acc = self.layers[0].weight.clone();
        for layer in &self.layers[1..n_layers.min(self.layers.len())] {
            acc = acc.dot(&layer.weight);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use ndarray::array;

    fn identity_relu() -> DenseNetwork {
        DenseNetwork::new(vec![DenseLayer { weight: Array2::eye(2), bias: Array1::zeros(2), activation: Activation::Relu }])
            .unwrap()
    }

    #[test]
    fn relu_forward() {
        let net = identity_relu();
        let (y, _) = net.forward(array![[1.0, -1.0]].view(), Mode::Eval, &TrainNoise::NONE, &mut rng_from_seed(0)).unwrap();
        assert_eq!(y, array![[1.0, 0.0]]);
    }

    #[test]
    fn dimension_checks() {
        let net = identity_relu();
        assert!(net.predict(array![[1.0, 2.0, 3.0]].view()).is_err());
        let bad = DenseNetwork::new(vec![
            DenseLayer::glorot(2, 3, Activation::Relu, &mut rng_from_seed(0)),
            DenseLayer::glorot(4, 1, Activation::Identity, &mut rng_from_seed(0)),
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn train_without_noise_equals_eval() {
        let mut rng = rng_from_seed(1);
        let net = DenseNetwork::mlp(&[4, 6, 3], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = Array2::from_shape_fn((5, 4), |(i, j)| (i as f64 - j as f64) * 0.3);
        let (train, _) = net.forward(x.view(), Mode::Train, &TrainNoise::NONE, &mut rng).unwrap();
        assert_eq!(train, net.predict(x.view()).unwrap());
    }

    #[test]
    fn inverted_dropout_preserves_expectation() {
        let mut rng = rng_from_seed(2);
        let net = DenseNetwork::mlp(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = array![[0.5, -0.2, 1.0]];
        let eval = net.predict(x.view()).unwrap();
        let noise = TrainNoise::new(0.5, 0.0).unwrap();
        let trials = 10_000;
        let mut mean = Array2::<f64>::zeros(eval.raw_dim());
        for seed in 0..trials {
            let (y, _) = net.forward(x.view(), Mode::Train, &noise, &mut rng_from_seed(seed)).unwrap();
            mean += &y;
        }
        mean /= trials as f64;
        for (m, e) in mean.iter().zip(eval.iter()) {
            assert!((m - e).abs() <= 0.05 * e.abs().max(0.1), "{m} vs {e}");
        }
    }

    #[test]
    fn linear_layer_gradient() {
        let net = DenseNetwork::new(vec![DenseLayer {
            weight: array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]],
            bias: Array1::zeros(2),
            activation: Activation::Identity,
        }])
        .unwrap();
        let x = array![[1.0, -2.0, 0.5]];
        let g = array![[0.3, -1.0]];
        let (_, cache) = net.forward(x.view(), Mode::Eval, &TrainNoise::NONE, &mut rng_from_seed(0)).unwrap();
        let grads = net.backward(&cache, g.view()).unwrap();
        assert_eq!(grads.layers[0].weight, x.t().dot(&g));
        assert_eq!(grads.layers[0].bias, array![0.3, -1.0]);
        assert_eq!(grads.input, g.dot(&net.layers()[0].weight.t()));
    }

    #[test]
    fn relu_blocks_negative_preactivations() {
        let net = identity_relu();
        let x = array![[-1.0, 2.0]];
        let (_, cache) = net.forward(x.view(), Mode::Eval, &TrainNoise::NONE, &mut rng_from_seed(0)).unwrap();
        let grads = net.backward(&cache, array![[1.0, 1.0]].view()).unwrap();
        assert_eq!(grads.input, array![[0.0, 1.0]]);
        assert_eq!(grads.layers[0].weight.column(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = identity_relu();
        let (_, cache) = net.forward(array![[1.0, 1.0]].view(), Mode::Eval, &TrainNoise::NONE, &mut rng_from_seed(0)).unwrap();
        net.parameters_mut()[0][0] = 2.0;
        assert!(matches!(net.backward(&cache, array![[1.0, 1.0]].view()), Err(Error::StaleCache)));
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..5 {
            let mut rng = rng_from_seed(seed);
            let mut net = DenseNetwork::mlp(&[5, 7, 4, 3], Activation::Relu, Activation::Identity, &mut rng).unwrap();
            let x = Array2::from_shape_simple_fn((6, 5), || rng.random_range(-1.0..1.0));
            let upstream = Array2::from_shape_simple_fn((6, 3), || rng.random_range(-1.0..1.0));
            let objective = |net: &DenseNetwork| (net.predict(x.view()).unwrap() * &upstream).sum();
            let (_, cache) = net.forward(x.view(), Mode::Eval, &TrainNoise::NONE, &mut rng).unwrap();
            let grads = net.backward(&cache, upstream.view()).unwrap();
            let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
            let step = 1e-6;
            for (pi, an) in analytic.iter().enumerate() {
                for (k, &a) in an.iter().enumerate() {
                    let orig = net.parameters_mut()[pi][k];
                    net.parameters_mut()[pi][k] = orig + step;
                    let up = objective(&net);
                    net.parameters_mut()[pi][k] = orig - step;
                    let down = objective(&net);
                    net.parameters_mut()[pi][k] = orig;
                    let fd = (up - down) / (2.0 * step);
                    let denom = fd.abs().max(a.abs()).max(1e-4);
                    assert!((fd - a).abs() / denom < 1e-5, "seed {seed} param {pi}[{k}]: {fd} vs {}", a);
                }
            }
        }
    }
}
