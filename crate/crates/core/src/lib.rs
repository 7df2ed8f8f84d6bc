//! Survival-supervised integration of multi-omics data.
//!
//! The crate bundles four fingerprint models (PCA, a plain autoencoder, a
//! Cox-supervised autoencoder and a concrete-selection supervised
//! autoencoder) together with the survival statistics and the
//! cross-validated evaluation pipeline used to compare them.
//!
//! ```no_run
//! use omicsurv::data::load_dataset;
//! use omicsurv::integrators::ModelKind;
//! use omicsurv::pipeline::{cross_validate, PipelineConfig};
//!
//! let dataset = load_dataset("data/skcm").unwrap();
//! let report = cross_validate(&dataset, ModelKind::Sae, &PipelineConfig::default()).unwrap();
//! println!("mean C-index {:.3}", report.mean_c_index);
//! ```

pub mod concrete;
pub mod data;
pub mod error;
pub mod integrators;
pub mod nn;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod survival;

pub use error::{Error, Result};
