//! Classical survival statistics plus the differentiable Cox loss used to
//! supervise the autoencoders.

mod concordance;
mod cox;
mod km;
mod logrank;
mod loss;

pub use concordance::{concordance_index, ConcordanceCounts};
pub use cox::{cox_fit, cox_fit_with_fallback, cox_pvalues, univariate_cox_select, wald_pvalue, CoxModel, CoxOptions};
pub use km::{km_estimate, KmCurve};
pub use logrank::{logrank_test, LogrankResult};
pub use loss::cox_neural_loss;
