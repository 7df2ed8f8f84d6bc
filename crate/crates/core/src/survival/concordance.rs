use crate::data::SurvivalLabels;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConcordanceCounts {
    pub correct: u64,
    pub tied: u64,
    pub admissible: u64,
}

impl ConcordanceCounts {
    /// Pair counts behind the concordance index. A pair is admissible when
    /// the sample with the smaller time had the event; at equal times it is
    /// admissible only if exactly one of the two had the event, which then
    /// counts as the earlier one.
    pub fn count(predictions: &[f64], labels: &SurvivalLabels) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), got: predictions.len() });
        }
        if predictions.iter().any(|p| p.is_nan()) {
            return Err(Error::NonFinite("predictions"));
        }
        let (t, e) = (labels.time(), labels.event());
        let mut c = Self::default();
        for i in 0..t.len() {
            for j in (i + 1)..t.len() {
                let (first, second) = if t[i] < t[j] || (t[i] == t[j] && e[i] && !e[j]) {
                    (i, j)
                } else if t[j] < t[i] || (t[i] == t[j] && e[j] && !e[i]) {
                    (j, i)
                } else {
                    continue;
                };
                if !e[first] {
                    continue;
                }
                c.admissible += 1;
                if predictions[first] > predictions[second] {
                    c.correct += 1;
                } else if predictions[first] == predictions[second] {
                    c.tied += 1;
                }
            }
        }
        Ok(c)
    }
}

/// Harrell-style concordance: higher predicted risk should mean an earlier
/// event. Tied predictions count half.
pub fn concordance_index(predictions: &[f64], labels: &SurvivalLabels) -> Result<f64> {
    let c = ConcordanceCounts::count(predictions, labels)?;
    if c.admissible == 0 {
        return Err(Error::NoAdmissiblePairs);
    }
    Ok((c.correct as f64 + c.tied as f64 / 2.0) / c.admissible as f64)
}
