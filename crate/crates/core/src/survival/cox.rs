use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::data::{column_variances, SurvivalLabels, DEGENERATE_STD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for CoxOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-7, max_halvings: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub beta: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub penalty: f64,
    pub iterations: usize,
}

impl CoxModel {
    /// Linear predictor (log relative hazard) for each row of `x`.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.beta.len() {
            return Err(Error::DimensionMismatch { expected: self.beta.len(), got: x.ncols() });
        }
        let beta = ArrayView1::from(&self.beta[..]);
        Ok(x.dot(&beta).to_vec())
    }
}

struct Derivatives {
    loglik: f64,
    gradient: DVector<f64>,
    hessian: DMatrix<f64>,
}

/// Breslow partial log-likelihood with gradient and Hessian. Samples tied
/// in time share one risk set.
fn breslow(x: ArrayView2<f64>, labels: &SurvivalLabels, beta: &DVector<f64>, order: &[usize]) -> Derivatives {
    let p = x.ncols();
    let eta: Vec<f64> = x.rows().into_iter().map(|row| row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum()).collect();
    let offset = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (t, e) = (labels.time(), labels.event());
    let mut s0 = 0.0;
    let mut s1: DVector<f64> = DVector::zeros(p);
    let mut s2: DMatrix<f64> = DMatrix::zeros(p, p);
    let mut out = Derivatives { loglik: 0.0, gradient: DVector::zeros(p), hessian: DMatrix::zeros(p, p) };
    let mut i = 0;
    while i < order.len() {
        let time = t[order[i]];
        let mut j = i;
        while j < order.len() && t[order[j]] == time {
            let k = order[j];
            let w = (eta[k] - offset).exp();
            s0 += w;
            for a in 0..p {
                let xa = x[[k, a]];
                s1[a] += w * xa;
                for b in 0..=a {
                    s2[(a, b)] += w * xa * x[[k, b]];
                }
            }
            j += 1;
        }
        let deaths = order[i..j].iter().filter(|&&k| e[k]).count() as f64;
        if deaths > 0.0 {
            let log_s0 = s0.ln() + offset;
            for &k in order[i..j].iter().filter(|&&k| e[k]) {
                out.loglik += eta[k] - log_s0;
                for a in 0..p {
                    out.gradient[a] += x[[k, a]];
                }
            }
            let mean = &s1 / s0;
            out.gradient -= &mean * deaths;
            for a in 0..p {
                for b in 0..=a {
                    out.hessian[(a, b)] -= deaths * (s2[(a, b)] / s0 - mean[a] * mean[b]);
                }
            }
        }
        i = j;
    }
    for a in 0..p {
        for b in 0..a {
            out.hessian[(b, a)] = out.hessian[(a, b)];
        }
    }
    out
}

fn penalized(d: &mut Derivatives, beta: &DVector<f64>, penalty: f64) {
    if penalty > 0.0 {
        d.loglik -= 0.5 * penalty * beta.norm_squared();
        d.gradient -= beta * penalty;
        for a in 0..beta.len() {
            d.hessian[(a, a)] -= penalty;
        }
    }
}

fn descending_time_order(labels: &SurvivalLabels) -> Vec<usize> {
    let t = labels.time();
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[b].total_cmp(&t[a]));
    order
}

/// Newton-Raphson fit of a Cox proportional-hazards model, maximizing the
/// Breslow partial log-likelihood minus `penalty / 2 * |beta|^2`.
///
/// Hitting the iteration cap or a non-invertible information matrix yields
/// a model with `converged == false` rather than an error.
pub fn cox_fit(x: ArrayView2<f64>, labels: &SurvivalLabels, penalty: f64) -> Result<CoxModel> {
    cox_fit_with(x, labels, penalty, CoxOptions::default())
}

pub fn cox_fit_with(x: ArrayView2<f64>, labels: &SurvivalLabels, penalty: f64, opts: CoxOptions) -> Result<CoxModel> {
    if x.nrows() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: x.nrows() });
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidInput("cox regression needs at least one covariate".into()));
    }
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(Error::InvalidInput(format!("penalty must be nonnegative, got {penalty}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cox covariates"));
    }
    if labels.n_events() == 0 {
        return Err(Error::NoEvents);
    }

    let p = x.ncols();
    let order = descending_time_order(labels);
    let mut beta = DVector::zeros(p);
    let mut current = breslow(x, labels, &beta, &order);
    penalized(&mut current, &beta, penalty);
    let mut converged = false;
    let mut singular = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let information = -current.hessian.clone();
        let Some(chol) = information.cholesky() else {
            singular = true;
            break;
        };
        let mut step = chol.solve(&current.gradient);
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let candidate = &beta + &step;
            let mut d = breslow(x, labels, &candidate, &order);
            penalized(&mut d, &candidate, penalty);
            if d.loglik.is_finite() && d.loglik >= current.loglik - 1e-12 * current.loglik.abs().max(1.0) {
                accepted = Some((candidate, d));
                break;
            }
            step *= 0.5;
        }
        let max_step = step.amax();
        match accepted {
            Some((candidate, d)) => {
                beta = candidate;
                current = d;
            }
            None => {
                // no ascent direction left at machine precision
                converged = max_step < opts.tol;
                break;
            }
        }
        if max_step < opts.tol {
            converged = true;
            break;
        }
    }

    let information = -current.hessian.clone();
    let standard_errors = match (!singular).then(|| information.try_inverse()).flatten() {
        Some(inv) => (0..p).map(|a| inv[(a, a)].max(0.0).sqrt()).collect(),
        None => {
            converged = false;
            vec![f64::NAN; p]
        }
    };
    if converged && standard_errors.iter().any(|s: &f64| !s.is_finite() || *s <= 0.0) {
        converged = false;
    }

    Ok(CoxModel {
        beta: beta.iter().copied().collect(),
        standard_errors,
        log_likelihood: current.loglik,
        converged,
        penalty,
        iterations,
    })
}

/// Unpenalized fit, retried once at `fallback_penalty` when it does not
/// converge.
pub fn cox_fit_with_fallback(x: ArrayView2<f64>, labels: &SurvivalLabels, fallback_penalty: f64) -> Result<CoxModel> {
    let model = cox_fit(x, labels, 0.0)?;
    if model.converged {
        return Ok(model);
    }
    cox_fit(x, labels, fallback_penalty)
}

/// Two-sided Wald p-value for a coefficient with the given standard error.
pub fn wald_pvalue(beta: f64, se: f64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    let z = (beta / se).abs();
    // 2 * (1 - Phi(z)) without cancellation in the tail
    erfc(z / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

pub fn cox_pvalues(model: &CoxModel) -> Result<Vec<f64>> {
    if !model.converged {
        return Err(Error::NotConverged);
    }
    Ok(model.beta.iter().zip(&model.standard_errors).map(|(&b, &se)| wald_pvalue(b, se)).collect())
}

/// Screens fingerprints one at a time and keeps those whose univariate Cox
/// coefficient has a Wald p-value below `alpha`. Constant columns are never
/// selected. When nothing passes, every index is returned.
pub fn univariate_cox_select(
    fingerprints: ArrayView2<f64>,
    labels: &SurvivalLabels,
    alpha: f64,
    fallback_penalty: f64,
) -> Vec<usize> {
    let variances = column_variances(fingerprints);
    let mut selected = Vec::new();
    for (j, column) in fingerprints.columns().into_iter().enumerate() {
        if variances[j] <= DEGENERATE_STD {
            continue;
        }
        let single = column.insert_axis(ndarray::Axis(1));
        let Ok(model) = cox_fit_with_fallback(single, labels, fallback_penalty) else {
            continue;
        };
        if let Ok(p) = cox_pvalues(&model) {
            if p[0] < alpha {
                selected.push(j);
            }
        }
    }
    if selected.is_empty() {
        (0..fingerprints.ncols()).collect()
    } else {
        selected
    }
}
