use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, DenseNetwork};
use crate::error::{Error, Result};

pub const NETWORK_FORMAT: &str = "omicsurv.dense";
pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    /// Row-major `inputs x outputs`.
    weight: Vec<f64>,
    bias: Vec<f64>,
}

/// On-disk form of a [`DenseNetwork`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    format: String,
    version: u32,
    layers: Vec<LayerRecord>,
}

impl From<&DenseNetwork> for NetworkFile {
    fn from(net: &DenseNetwork) -> Self {
        Self {
            format: NETWORK_FORMAT.into(),
            version: NETWORK_FORMAT_VERSION,
            layers: net
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                    weight: l.weight.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<NetworkFile> for DenseNetwork {
    type Error = Error;

    fn try_from(file: NetworkFile) -> Result<Self> {
        if file.format != NETWORK_FORMAT || file.version != NETWORK_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!("unsupported network format {} v{}", file.format, file.version)));
        }
        let layers = file
            .layers
            .into_iter()
            .map(|l| {
                let weight = Array2::from_shape_vec((l.inputs, l.outputs), l.weight)
                    .map_err(|e| Error::InvalidInput(format!("weight shape: {e}")))?;
                Ok(DenseLayer { weight, bias: Array1::from(l.bias), activation: l.activation })
            })
            .collect::<Result<Vec<_>>>()?;
        DenseNetwork::new(layers)
    }
}

impl DenseNetwork {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&NetworkFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<NetworkFile>(s)?.try_into()
    }
}
