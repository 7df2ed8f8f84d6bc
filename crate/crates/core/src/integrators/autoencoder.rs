//! Training of the dense autoencoders (plain and Cox-supervised) and the
//! concrete-selection autoencoder.
//!
//! All three minimize `L_rec + L_cox + L_norm` full-batch with Adam, where
//! `L_cox` is absent for the plain autoencoder and `L_norm` is `lambda`
//! times the squared Frobenius norms of the dense weight matrices.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::concrete::{
    concrete_backward, concrete_forward_eval, concrete_forward_with_gumbel, gumbel_sample, temperature, ConcreteLayer,
};
use crate::data::SurvivalLabels;
use crate::error::{Error, Result};
use crate::nn::{adam_step, l2_penalty, mse_loss, Activation, AdamState, DenseNetwork, Mode, NetworkGrads, TrainNoise};
use crate::seed::{derive_seed, rng_from_seed};
use crate::survival::cox_neural_loss;

/// Loss components of one evaluation of the objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub reconstruction: f64,
    pub cox: f64,
    pub norm: f64,
}

/// Per-epoch training losses (before that epoch's update).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub total: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub cox: Vec<f64>,
}

impl TrainingHistory {
    fn push(&mut self, parts: LossParts) {
        self.total.push(parts.total);
        self.reconstruction.push(parts.reconstruction);
        self.cox.push(parts.cox);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: DenseNetwork,
    pub decoder: DenseNetwork,
    /// Linear log-hazard head; `None` for the unsupervised autoencoder.
    pub hazard: Option<DenseNetwork>,
    pub history: TrainingHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteAutoencoder {
    pub selector: ConcreteLayer,
    pub decoder: DenseNetwork,
    pub hazard: DenseNetwork,
    pub history: TrainingHistory,
}

fn add_input_noise<R: Rng + ?Sized>(x: ArrayView2<f64>, std: f64, rng: &mut R) -> Array2<f64> {
    let mut out = x.to_owned();
    if std > 0.0 {
        out.mapv_inplace(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + std * z
        });
    }
    out
}

fn check_training_inputs(x: ArrayView2<f64>, labels: Option<&SurvivalLabels>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidInput("empty training matrix".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training matrix"));
    }
    if let Some(l) = labels {
        if l.len() != x.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: l.len() });
        }
        if l.n_events() == 0 {
            return Err(Error::NoEvents);
        }
    }
    Ok(())
}

fn non_finite_at(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::NonFiniteLoss { epoch },
        other => other,
    }
}

fn flatten(grads: &[NetworkGrads]) -> Vec<Vec<f64>> {
    grads.iter().flat_map(|g| g.slices().into_iter().map(<[f64]>::to_vec)).collect()
}

impl Autoencoder {
    /// Evaluates the objective and its gradient with respect to every
    /// parameter, ordered encoder, decoder, hazard head (weights then bias
    /// per layer).
    pub fn objective<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<f64>,
        labels: Option<&SurvivalLabels>,
        lambda: f64,
        mode: Mode,
        noise: &TrainNoise,
        rng: &mut R,
    ) -> Result<(LossParts, Vec<Vec<f64>>)> {
        let decoder_noise = TrainNoise { dropout_rate: noise.dropout_rate, noise_std: 0.0 };
        let (z, enc_cache) = self.encoder.forward(x, mode, noise, rng)?;
        let (x_hat, dec_cache) = self.decoder.forward(z.view(), mode, &decoder_noise, rng)?;
        let (reconstruction, rec_grad) = mse_loss(x, x_hat.view())?;
        let mut dec_grads = self.decoder.backward(&dec_cache, rec_grad.view())?;
        let mut z_grad = dec_grads.input.clone();

        let mut cox = 0.0;
        let mut hazard_grads = None;
        if let (Some(head), Some(labels)) = (&self.hazard, labels) {
            let (log_h, head_cache) = head.forward(z.view(), Mode::Eval, &TrainNoise::NONE, rng)?;
            let (loss, g) = cox_neural_loss(&log_h.column(0).to_vec(), labels)?;
            cox = loss;
            let g = Array2::from_shape_vec((g.len(), 1), g).expect("column vector");
            let hg = head.backward(&head_cache, g.view())?;
            z_grad += &hg.input;
            hazard_grads = Some(hg);
        }
        let mut enc_grads = self.encoder.backward(&enc_cache, z_grad.view())?;

        let mut nets: Vec<&DenseNetwork> = vec![&self.encoder, &self.decoder];
        if let Some(h) = &self.hazard {
            nets.push(h);
        }
        let (norm, _) = l2_penalty(&nets, lambda);
        enc_grads.add_l2(&self.encoder, lambda);
        dec_grads.add_l2(&self.decoder, lambda);
        let mut all = vec![enc_grads, dec_grads];
        if let (Some(mut hg), Some(head)) = (hazard_grads, &self.hazard) {
            hg.add_l2(head, lambda);
            all.push(hg);
        }
        let parts = LossParts { total: reconstruction + cox + norm, reconstruction, cox, norm };
        Ok((parts, flatten(&all)))
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.encoder.parameters_mut();
        p.extend(self.decoder.parameters_mut());
        if let Some(h) = &mut self.hazard {
            p.extend(h.parameters_mut());
        }
        p
    }

    fn parameter_sizes(&self) -> Vec<usize> {
        let mut s = self.encoder.parameter_sizes();
        s.extend(self.decoder.parameter_sizes());
        if let Some(h) = &self.hazard {
            s.extend(h.parameter_sizes());
        }
        s
    }

    pub fn initialize<R: Rng + ?Sized>(d: usize, config: &ModelConfig, supervised: bool, rng: &mut R) -> Result<Self> {
        let f = config.n_fingerprints;
        let h = config.hidden;
        Ok(Self {
            encoder: DenseNetwork::mlp(&[d, h, f], Activation::Relu, Activation::Identity, rng)?,
            decoder: DenseNetwork::mlp(&[f, h, d], Activation::Relu, Activation::Identity, rng)?,
            hazard: if supervised {
                Some(DenseNetwork::mlp(&[f, 1], Activation::Identity, Activation::Identity, rng)?)
            } else {
                None
            },
            history: TrainingHistory::default(),
        })
    }

    /// Eval-mode fingerprints.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.encoder.predict(x)
    }
}

/// Trains a dense autoencoder; Cox-supervised when `labels` is given.
pub fn train_dense(x: ArrayView2<f64>, labels: Option<&SurvivalLabels>, config: &ModelConfig, seed: u64) -> Result<Autoencoder> {
    config.validate()?;
    check_training_inputs(x, labels)?;
    let mut init_rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut noise_rng = rng_from_seed(derive_seed(seed, &[1]));
    let mut model = Autoencoder::initialize(x.ncols(), config, labels.is_some(), &mut init_rng)?;
    let noise = TrainNoise::new(config.dropout, config.noise_std)?;
    let mut adam = AdamState::new(config.learning_rate, &model.parameter_sizes());
    for epoch in 0..config.epochs {
        let (parts, grads) = model
            .objective(x, labels, config.l2_lambda, Mode::Train, &noise, &mut noise_rng)
            .map_err(|e| non_finite_at(e, epoch))?;
        if !parts.total.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        model.history.push(parts);
        let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
        adam_step(&mut model.parameters_mut(), &grad_refs, &mut adam)?;
    }
    if !(model.encoder.weights_finite() && model.decoder.weights_finite()) {
        return Err(Error::NonFiniteLoss { epoch: config.epochs });
    }
    Ok(model)
}

impl ConcreteAutoencoder {
    /// Objective at temperature `temp` with the given Gumbel draws. Gradient
    /// order: selector log-alphas, decoder, hazard head. The weight norm
    /// covers the decoder and the hazard head.
    #[allow(clippy::too_many_arguments)]
    pub fn objective_with_gumbel<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<f64>,
        labels: &SurvivalLabels,
        lambda: f64,
        temp: f64,
        gumbel: ArrayView2<f64>,
        mode: Mode,
        noise: &TrainNoise,
        rng: &mut R,
    ) -> Result<(LossParts, Vec<Vec<f64>>)> {
        let input = if mode == Mode::Train { add_input_noise(x, noise.noise_std, rng) } else { x.to_owned() };
        let decoder_noise = TrainNoise { dropout_rate: noise.dropout_rate, noise_std: 0.0 };
        let (z, _, sel_cache) = concrete_forward_with_gumbel(input.view(), &self.selector, temp, gumbel)?;
        let (x_hat, dec_cache) = self.decoder.forward(z.view(), mode, &decoder_noise, rng)?;
        let (reconstruction, rec_grad) = mse_loss(x, x_hat.view())?;
        let mut dec_grads = self.decoder.backward(&dec_cache, rec_grad.view())?;
        let (log_h, head_cache) = self.hazard.forward(z.view(), Mode::Eval, &TrainNoise::NONE, rng)?;
        let (cox, g) = cox_neural_loss(&log_h.column(0).to_vec(), labels)?;
        let g = Array2::from_shape_vec((g.len(), 1), g).expect("column vector");
        let mut head_grads = self.hazard.backward(&head_cache, g.view())?;
        let z_grad = &dec_grads.input + &head_grads.input;
        let sel_grads = concrete_backward(&self.selector, &sel_cache, z_grad.view())?;

        let (norm, _) = l2_penalty(&[&self.decoder, &self.hazard], lambda);
        dec_grads.add_l2(&self.decoder, lambda);
        head_grads.add_l2(&self.hazard, lambda);
        let mut grads = vec![sel_grads.log_alpha.iter().copied().collect()];
        grads.extend(flatten(&[dec_grads, head_grads]));
        let parts = LossParts { total: reconstruction + cox + norm, reconstruction, cox, norm };
        Ok((parts, grads))
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = vec![self.selector.log_alpha_mut()];
        p.extend(self.decoder.parameters_mut());
        p.extend(self.hazard.parameters_mut());
        p
    }

    fn parameter_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.selector.log_alpha().len()];
        s.extend(self.decoder.parameter_sizes());
        s.extend(self.hazard.parameter_sizes());
        s
    }

    pub fn initialize<R: Rng + ?Sized>(d: usize, config: &ModelConfig, rng: &mut R) -> Result<Self> {
        let f = config.n_fingerprints;
        let schedule_end = config.epochs.saturating_sub(1).max(1);
        Ok(Self {
            selector: ConcreteLayer::new(f, d, config.t0, config.tb, schedule_end, rng)?,
            decoder: DenseNetwork::mlp(&[f, config.hidden, d], Activation::Relu, Activation::Identity, rng)?,
            hazard: DenseNetwork::mlp(&[f, 1], Activation::Identity, Activation::Identity, rng)?,
            history: TrainingHistory::default(),
        })
    }

    /// Eval-mode fingerprints: the selected input columns.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        concrete_forward_eval(x, &self.selector)
    }
}

/// Trains the concrete-selection supervised autoencoder. Epoch `b` runs at
/// temperature `T(b)`, reaching the final temperature on the last epoch.
pub fn train_concrete(
    x: ArrayView2<f64>,
    labels: &SurvivalLabels,
    config: &ModelConfig,
    seed: u64,
) -> Result<ConcreteAutoencoder> {
    config.validate()?;
    check_training_inputs(x, Some(labels))?;
    let mut init_rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut noise_rng = rng_from_seed(derive_seed(seed, &[1]));
    let mut model = ConcreteAutoencoder::initialize(x.ncols(), config, &mut init_rng)?;
    let noise = TrainNoise::new(config.dropout, config.noise_std)?;
    let mut adam = AdamState::new(config.learning_rate, &model.parameter_sizes());
    for epoch in 0..config.epochs {
        let temp = temperature(epoch, &model.selector);
        let g = gumbel_sample(model.selector.log_alpha().dim(), &mut noise_rng);
        let (parts, grads) = model
            .objective_with_gumbel(x, labels, config.l2_lambda, temp, g.view(), Mode::Train, &noise, &mut noise_rng)
            .map_err(|e| non_finite_at(e, epoch))?;
        if !parts.total.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        model.history.push(parts);
        let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
        adam_step(&mut model.parameters_mut(), &grad_refs, &mut adam)?;
    }
    Ok(model)
}
