//! A small dense-network core with explicit forward and backward passes.
//!
//! Just enough to train the autoencoders: fully connected layers with ReLU
//! or identity activations, inverted dropout, Gaussian input noise, the
//! reconstruction and weight-norm losses, Adam, and a versioned JSON format.

mod adam;
mod dense;
mod loss;
mod serial;

pub use adam::{adam_step, AdamState};
pub use dense::{Activation, DenseLayer, DenseNetwork, ForwardCache, LayerGrads, Mode, NetworkGrads, TrainNoise};
pub use loss::{l2_penalty, mse_loss};
pub use serial::{NetworkFile, NETWORK_FORMAT, NETWORK_FORMAT_VERSION};
