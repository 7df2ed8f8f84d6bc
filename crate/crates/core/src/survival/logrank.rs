use statrs::function::erf::erfc;

use crate::data::SurvivalLabels;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogrankResult {
    pub chi2: f64,
    pub p_value: f64,
}

/// Two-group logrank test. `groups[i] == true` puts sample `i` in group one.
pub fn logrank_test(labels: &SurvivalLabels, groups: &[bool]) -> Result<LogrankResult> {
    if groups.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: groups.len() });
    }
    let n1_total = groups.iter().filter(|&&g| g).count();
    if n1_total == 0 || n1_total == groups.len() {
        return Err(Error::EmptyGroup);
    }
    if labels.n_events() == 0 {
        return Err(Error::NoEvents);
    }

    let (t, e) = (labels.time(), labels.event());
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));

    let mut at_risk = t.len() as f64;
    let mut at_risk_1 = n1_total as f64;
    let (mut observed, mut expected, mut variance) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let time = t[order[i]];
        let (mut d, mut d1, mut leaving, mut leaving_1) = (0.0, 0.0, 0.0, 0.0);
        let mut j = i;
        while j < order.len() && t[order[j]] == time {
            let k = order[j];
            leaving += 1.0;
            if groups[k] {
                leaving_1 += 1.0;
            }
            if e[k] {
                d += 1.0;
                if groups[k] {
                    d1 += 1.0;
                }
            }
            j += 1;
        }
        if d > 0.0 {
            let frac = at_risk_1 / at_risk;
            observed += d1;
            expected += d * frac;
            if at_risk > 1.0 {
                variance += d * frac * (1.0 - frac) * (at_risk - d) / (at_risk - 1.0);
            }
        }
        at_risk -= leaving;
        at_risk_1 -= leaving_1;
        i = j;
    }

    let chi2 = if variance > 0.0 { (observed - expected).powi(2) / variance } else { 0.0 };
    // chi-square(1) survival function
    let p_value = erfc((chi2 / 2.0).sqrt()).clamp(0.0, 1.0);
    Ok(LogrankResult { chi2, p_value })
}
