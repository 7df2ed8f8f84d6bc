use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::cv::CvReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    /// Mean test C-index per dataset over the common folds.
    pub mean_c_index: BTreeMap<String, f64>,
    /// Rank per dataset (1 = best, ties averaged).
    pub ranks: BTreeMap<String, f64>,
    pub average_rank: f64,
    /// Mean of the pooled fold-level C-indices.
    pub pooled_mean: f64,
    pub pooled_folds: usize,
}

/// Independent two-sided Student t-test of `a` against `b`; `dataset` is
/// `None` for the test on folds pooled across datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub dataset: Option<String>,
    pub t_statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub datasets: Vec<String>,
    /// Ordered by average rank, best first.
    pub models: Vec<ModelSummary>,
    pub tests: Vec<PairwiseTest>,
    /// Successful `(repeat, fold)` keys shared by every model, per dataset.
    pub common_folds: BTreeMap<String, Vec<(usize, usize)>>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pooled-variance two-sample t-test, returning `(t, p)`. Two samples with
/// zero spread give `p = 1` when their means agree and `p = 0` otherwise.
pub fn student_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() || a.len() + b.len() < 3 {
        return Err(Error::InvalidInput("t-test needs at least 3 observations over two non-empty samples".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let df = (a.len() + b.len() - 2) as f64;
    let pooled = (ss(a, ma) + ss(b, mb)) / df;
    let scale = (pooled * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    let diff = ma - mb;
    if scale == 0.0 || !scale.is_finite() {
        return Ok(if diff == 0.0 { (0.0, 1.0) } else { (diff.signum() * f64::INFINITY, 0.0) });
    }
    let t = diff / scale;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok((t, p))
}

/// Ranks with ties averaged; the highest value gets rank 1.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Compares cross-validation reports of at least two models. Reports are
/// grouped by dataset label; every model must be present for every dataset
/// and only folds that succeeded for all models of a dataset are used.
pub fn compare_models(reports: &[CvReport]) -> Result<Comparison> {
    let mut table: BTreeMap<String, BTreeMap<String, &CvReport>> = BTreeMap::new();
    for r in reports {
        let models = table.entry(r.dataset.clone()).or_default();
        if models.insert(r.model.to_string(), r).is_some() {
            return Err(Error::InvalidInput(format!("two reports for model {} on dataset '{}'", r.model, r.dataset)));
        }
    }
    let model_names: BTreeSet<String> = reports.iter().map(|r| r.model.to_string()).collect();
    if model_names.len() < 2 {
        return Err(Error::InvalidInput("comparison needs reports of at least two models".into()));
    }
    let names: Vec<String> = model_names.into_iter().collect();

    let mut common_folds = BTreeMap::new();
    let mut per_dataset_scores: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for (dataset, models) in &table {
        if models.len() != names.len() {
            return Err(Error::InvalidInput(format!("dataset '{dataset}' lacks reports for some models")));
        }
        let mut keys: Option<BTreeSet<(usize, usize)>> = None;
        for r in models.values() {
            let k: BTreeSet<_> = r.success_keys().into_iter().collect();
            keys = Some(match keys {
                None => k,
                Some(prev) => prev.intersection(&k).copied().collect(),
            });
        }
        let keys: Vec<(usize, usize)> = keys.unwrap_or_default().into_iter().collect();
        if keys.is_empty() {
            return Err(Error::NoCommonFolds);
        }
        let scores = names
            .iter()
            .map(|m| keys.iter().map(|&k| models[m].c_index_at(k).expect("common key succeeded")).collect())
            .collect();
        per_dataset_scores.insert(dataset.clone(), scores);
        common_folds.insert(dataset.clone(), keys);
    }

    let mut models: Vec<ModelSummary> = names
        .iter()
        .map(|m| ModelSummary {
            model: m.clone(),
            mean_c_index: BTreeMap::new(),
            ranks: BTreeMap::new(),
            average_rank: 0.0,
            pooled_mean: 0.0,
            pooled_folds: 0,
        })
        .collect();
    let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut tests = Vec::new();
    for (dataset, scores) in &per_dataset_scores {
        let means: Vec<f64> = scores.iter().map(|s| mean(s)).collect();
        let ranks = average_ranks(&means);
        for (i, summary) in models.iter_mut().enumerate() {
            summary.mean_c_index.insert(dataset.clone(), means[i]);
            summary.ranks.insert(dataset.clone(), ranks[i]);
            pooled[i].extend(&scores[i]);
        }
        if per_dataset_scores.len() > 1 {
            for i in 0..names.len() {
                for j in i + 1..names.len() {
                    let (t, p) = student_t_test(&scores[i], &scores[j])?;
                    tests.push(PairwiseTest {
                        a: names[i].clone(),
                        b: names[j].clone(),
                        dataset: Some(dataset.clone()),
                        t_statistic: t,
                        p_value: p,
                    });
                }
            }
        }
    }
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let (t, p) = student_t_test(&pooled[i], &pooled[j])?;
            tests.push(PairwiseTest { a: names[i].clone(), b: names[j].clone(), dataset: None, t_statistic: t, p_value: p });
        }
    }
    for (summary, scores) in models.iter_mut().zip(&pooled) {
        summary.average_rank = summary.ranks.values().sum::<f64>() / summary.ranks.len() as f64;
        summary.pooled_mean = mean(scores);
        summary.pooled_folds = scores.len();
    }
    models.sort_by(|a, b| a.average_rank.total_cmp(&b.average_rank).then_with(|| a.model.cmp(&b.model)));
    Ok(Comparison { datasets: table.keys().cloned().collect(), models, tests, common_folds })
}

/// Plain-text table of models sorted by average rank (best first).
pub fn render_rank_table(rows: &[(String, f64)]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let width = sorted.iter().map(|r| r.0.len()).max().unwrap_or(0).max("model".len());
    let mut out = format!("{:<width$}  average_rank\n", "model");
    for (name, rank) in &sorted {
        let _ = writeln!(out, "{name:<width$}  {rank:.2}");
    }
    out
}

impl Comparison {
    /// Human-readable summary: the rank table, per-dataset means and the
    /// pairwise tests.
    pub fn render(&self) -> String {
        let rows: Vec<(String, f64)> = self.models.iter().map(|m| (m.model.clone(), m.average_rank)).collect();
        let mut out = render_rank_table(&rows);
        out.push('\n');
        for m in &self.models {
            let _ = write!(out, "{}: pooled mean C-index {:.4} over {} folds", m.model, m.pooled_mean, m.pooled_folds);
            for (d, v) in &m.mean_c_index {
                let label = if d.is_empty() { "-" } else { d.as_str() };
                let _ = write!(out, "; {label} {v:.4}");
            }
            out.push('\n');
        }
        out.push('\n');
        for t in &self.tests {
            let scope = t.dataset.as_deref().unwrap_or("pooled");
            let _ = writeln!(out, "{} vs {} ({scope}): t = {:.4}, p = {:.4e}", t.a, t.b, t.t_statistic, t.p_value);
        }
        out
    }
}
