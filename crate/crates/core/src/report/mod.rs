//! Persisted outputs: fold-level CSV and JSON reports, run manifests,
//! comparison tables, Kaplan-Meier exports and synthetic datasets.

mod km;
mod synth;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use km::{km_export, km_export_from_report, km_svg, KmExport, KmGroup};
pub use synth::{generate_synthetic, write_synthetic, PlantedFeature, SyntheticSpec};

use crate::error::{Error, Result};
use crate::integrators::ModelKind;
use crate::pipeline::{Comparison, CvReport, FoldResult, PipelineConfig};
use crate::seed::derive_seed;

pub const REPORT_CSV_HEADER: [&str; 6] = ["model", "repeat", "fold", "c_index", "logrank_p", "failure"];

/// One line of a report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: ModelKind,
    pub repeat: usize,
    pub fold: usize,
    pub c_index: Option<f64>,
    pub logrank_p: Option<f64>,
    pub failure: Option<String>,
}

fn opt_float(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Malformed { file: "<csv>".into(), reason: e.to_string() })
}

/// One row per fold, floats in shortest round-trip form, empty cells for
/// missing values.
pub fn report_csv(report: &CvReport) -> Result<String> {
    let rows: Vec<ReportRow> = report
        .folds
        .iter()
        .map(|f| ReportRow {
            model: report.model,
            repeat: f.repeat_index,
            fold: f.fold_index,
            c_index: f.c_index,
            logrank_p: f.logrank_p,
            failure: f.failure.clone(),
        })
        .collect();
    rows_to_csv(&rows)
}

pub fn rows_to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            r.repeat.to_string(),
            r.fold.to_string(),
            opt_float(r.c_index),
            opt_float(r.logrank_p),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    finish_csv(w)
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let malformed = |reason: String| Error::Malformed { file: "<report csv>".into(), reason };
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != REPORT_CSV_HEADER {
        return Err(malformed(format!("unexpected header {header:?}")));
    }
    let float = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| malformed(format!("bad number '{s}'")))
        }
    };
    let int = |s: &str| s.parse::<usize>().map_err(|_| malformed(format!("bad index '{s}'")));
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(ReportRow {
                model: rec[0].parse()?,
                repeat: int(&rec[1])?,
                fold: int(&rec[2])?,
                c_index: float(&rec[3])?,
                logrank_p: float(&rec[4])?,
                failure: (!rec[5].is_empty()).then(|| rec[5].to_owned()),
            })
        })
        .collect()
}

/// Rebuilds a summary-level report from CSV rows. Fold details beyond the
/// CSV columns are left empty and the config is the default.
pub fn report_from_rows(dataset: impl Into<String>, rows: &[ReportRow]) -> Result<CvReport> {
    let model = rows.first().ok_or(Error::AllFoldsFailed)?.model;
    if rows.iter().any(|r| r.model != model) {
        return Err(Error::InvalidInput("report CSV mixes several models".into()));
    }
    let folds = rows
        .iter()
        .map(|r| FoldResult {
            repeat_index: r.repeat,
            fold_index: r.fold,
            c_index: r.c_index,
            logrank_p: r.logrank_p,
            selected_fingerprints: Vec::new(),
            n_fingerprints: 0,
            test_indices: Vec::new(),
            cluster_labels: Vec::new(),
            test_risk: Vec::new(),
            failure: r.failure.clone(),
        })
        .collect();
    CvReport::new(dataset, model, PipelineConfig::default(), folds)
}

pub fn report_to_json(report: &CvReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn report_from_json(text: &str) -> Result<CvReport> {
    Ok(serde_json::from_str(text)?)
}

/// Dataset label for a CSV report: taken from a `manifest.json` next to it,
/// else the parent directory name.
fn csv_dataset_label(path: &Path) -> String {
    let dir = path.parent().unwrap_or(Path::new(""));
    std::fs::read_to_string(dir.join("manifest.json"))
        .ok()
        .and_then(|text| serde_json::from_str::<RunManifest>(&text).ok())
        .map(|m| m.dataset)
        .unwrap_or_else(|| dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
}

/// Loads a report from `.json` (full detail) or `.csv` (fold metrics only).
pub fn load_report(path: impl AsRef<Path>) -> Result<CvReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let label = csv_dataset_label(path);
            report_from_rows(label, &parse_report_csv(&text)?)
        }
        _ => report_from_json(&text),
    }
}

/// Everything needed to rerun a cross-validation exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub dataset: String,
    pub model: ModelKind,
    pub config: PipelineConfig,
    /// Hex SHA-256 of the compact JSON form of `config`.
    pub config_sha256: String,
    pub master_seed: u64,
    /// `(repeat, fold, seed)` for every fold.
    pub fold_seeds: Vec<(usize, usize, u64)>,
}

pub fn config_hash(config: &PipelineConfig) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(config)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn new(dataset: impl Into<String>, model: ModelKind, config: &PipelineConfig) -> Result<Self> {
        let fold_seeds = (0..config.repeats)
            .flat_map(|r| (0..config.folds).map(move |f| (r, f, derive_seed(config.master_seed, &[r as u64, f as u64]))))
            .collect();
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            dataset: dataset.into(),
            model,
            config: *config,
            config_sha256: config_hash(config)?,
            master_seed: config.master_seed,
            fold_seeds,
        })
    }
}

/// Model-level comparison table: rank, means and pooled fold counts.
pub fn comparison_csv(cmp: &Comparison) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "average_rank", "pooled_mean_c_index", "pooled_folds"])?;
    for m in &cmp.models {
        w.write_record([m.model.clone(), m.average_rank.to_string(), m.pooled_mean.to_string(), m.pooled_folds.to_string()])?;
    }
    finish_csv(w)
}

/// Pairwise t-tests, `dataset` empty for the pooled tests.
pub fn pairwise_csv(cmp: &Comparison) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model_a", "model_b", "dataset", "t_statistic", "p_value"])?;
    for t in &cmp.tests {
        w.write_record([
            t.a.clone(),
            t.b.clone(),
            t.dataset.clone().unwrap_or_default(),
            t.t_statistic.to_string(),
            t.p_value.to_string(),
        ])?;
    }
    finish_csv(w)
}

/// Fold-level C-index distributions, one row per successful fold.
pub fn violin_csv(reports: &[CvReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "dataset", "repeat", "fold", "c_index"])?;
    for r in reports {
        for f in &r.folds {
            if let Some(c) = f.c_index {
                w.write_record([
                    r.model.to_string(),
                    r.dataset.clone(),
                    f.repeat_index.to_string(),
                    f.fold_index.to_string(),
                    c.to_string(),
                ])?;
            }
        }
    }
    finish_csv(w)
}
