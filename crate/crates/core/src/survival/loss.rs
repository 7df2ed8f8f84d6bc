use crate::data::SurvivalLabels;
use crate::error::{Error, Result};

/// Negative partial log-likelihood of per-sample log-hazards, averaged over
/// events, with the analytic gradient in input order.
///
/// Risk sets follow Breslow: every sample with `t_j >= t_i` belongs to the
/// risk set of event `i`. The log-sum-exp over each risk set is shifted by
/// `max(log_h)` so large log-hazards never overflow. Inputs need not be
/// sorted.
pub fn cox_neural_loss(log_h: &[f64], labels: &SurvivalLabels) -> Result<(f64, Vec<f64>)> {
    let n = labels.len();
    if log_h.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: log_h.len() });
    }
    if log_h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log hazards"));
    }
    let n_events = labels.n_events();
    if n_events == 0 {
        return Err(Error::NoEvents);
    }
    let (t, e) = (labels.time(), labels.event());
    let gamma = log_h.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| t[b].total_cmp(&t[a]));

    // Walk from the latest time to the earliest, growing the shifted risk sum.
    // `group_sum[g]` is the risk-set sum shared by tied group g.
    let mut groups: Vec<(usize, usize, f64)> = Vec::new();
    let mut risk = 0.0;
    let mut i = 0;
    while i < n {
        let time = t[order[i]];
        let mut j = i;
        while j < n && t[order[j]] == time {
            risk += (log_h[order[j]] - gamma).exp();
            j += 1;
        }
        groups.push((i, j, risk));
        i = j;
    }

    let mut loss = 0.0;
    for &(start, end, risk) in &groups {
        let log_risk = risk.ln() + gamma;
        for &k in &order[start..end] {
            if e[k] {
                loss -= log_h[k] - log_risk;
            }
        }
    }
    let scale = 1.0 / n_events as f64;
    loss *= scale;

    // d loss / d log_h_k = (exp(log_h_k) * sum_{events i: t_i <= t_k} 1/R_i - e_k) / E
    // accumulated from the earliest time upwards.
    let mut grad = vec![0.0; n];
    let mut inv_risk_sum = 0.0;
    for &(start, end, risk) in groups.iter().rev() {
        let deaths = order[start..end].iter().filter(|&&k| e[k]).count() as f64;
        inv_risk_sum += deaths / risk;
        for &k in &order[start..end] {
            let w = (log_h[k] - gamma).exp();
            grad[k] = (w * inv_risk_sum - f64::from(u8::from(e[k]))) * scale;
        }
    }
    Ok((loss, grad))
}
