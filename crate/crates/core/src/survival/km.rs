use serde::{Deserialize, Serialize};

use crate::data::SurvivalLabels;

/// Product-limit survival curve evaluated at the distinct event times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub event_times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl KmCurve {
    /// S(t) as a right-continuous step function.
    pub fn survival_at(&self, t: f64) -> f64 {
        match self.event_times.iter().rposition(|&et| et <= t) {
            Some(i) => self.survival[i],
            None => 1.0,
        }
    }
}

pub fn km_estimate(labels: &SurvivalLabels) -> KmCurve {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels.time()[a].total_cmp(&labels.time()[b]));

    let mut curve = KmCurve { event_times: Vec::new(), survival: Vec::new(), at_risk: Vec::new(), events: Vec::new() };
    let mut at_risk = labels.len();
    let mut s = 1.0;
    let mut i = 0;
    while i < order.len() {
        let t = labels.time()[order[i]];
        let mut j = i;
        let mut deaths = 0;
        while j < order.len() && labels.time()[order[j]] == t {
            deaths += usize::from(labels.event()[order[j]]);
            j += 1;
        }
        if deaths > 0 {
            s *= 1.0 - deaths as f64 / at_risk as f64;
            curve.event_times.push(t);
            curve.survival.push(s);
            curve.at_risk.push(at_risk);
            curve.events.push(deaths);
        }
        at_risk -= j - i;
        i = j;
    }
    curve
}
