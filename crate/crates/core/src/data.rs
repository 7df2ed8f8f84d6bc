//! Dataset ingestion, feature bookkeeping, variance-based feature selection
//! and train-only z-scoring.
//!
//! On disk a dataset is a directory holding one `<layer>.tsv` per omics layer
//! and a `survival.tsv`:
//!
//! ```text
//! sample_id   feat1   feat2   ...        sample_id   time   event
//! S001        0.12    -1.3               S001        412    1
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SURVIVAL_FILE: &str = "survival.tsv";

/// Standard deviations at or below this are treated as degenerate.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OmicsLayer {
    name: String,
    feature_names: Vec<String>,
    values: Array2<f64>,
}

impl OmicsLayer {
    pub fn new(name: impl Into<String>, feature_names: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let name = name.into();
        if feature_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch { expected: values.ncols(), got: feature_names.len() });
        }
        let mut seen = HashSet::with_capacity(feature_names.len());
        for f in &feature_names {
            if !seen.insert(f.as_str()) {
                return Err(Error::DuplicateFeature { layer: name, name: f.clone() });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer values"));
        }
        Ok(Self { name, feature_names, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self { name: self.name.clone(), feature_names: self.feature_names.clone(), values: self.values.select(Axis(0), rows) }
    }
}

/// Per-sample time-to-event and event indicator (`true` = event observed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalLabels {
    time: Vec<f64>,
    event: Vec<bool>,
}

impl SurvivalLabels {
    pub fn new(time: Vec<f64>, event: Vec<bool>) -> Result<Self> {
        if time.len() != event.len() {
            return Err(Error::DimensionMismatch { expected: time.len(), got: event.len() });
        }
        if time.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("survival time"));
        }
        if time.iter().any(|&t| t < 0.0) {
            return Err(Error::InvalidInput("negative survival time".into()));
        }
        Ok(Self { time, event })
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self { time: rows.iter().map(|&i| self.time[i]).collect(), event: rows.iter().map(|&i| self.event[i]).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiOmicsDataset {
    sample_ids: Vec<String>,
    layers: Vec<OmicsLayer>,
    survival: SurvivalLabels,
}

impl MultiOmicsDataset {
    pub fn new(sample_ids: Vec<String>, layers: Vec<OmicsLayer>, survival: SurvivalLabels) -> Result<Self> {
        let n = sample_ids.len();
        let mut seen = HashSet::with_capacity(n);
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateSample { file: "<dataset>".into(), id: id.clone() });
            }
        }
        if survival.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: survival.len() });
        }
        for layer in &layers {
            if layer.values.nrows() != n {
                return Err(Error::DimensionMismatch { expected: n, got: layer.values.nrows() });
            }
        }
        Ok(Self { sample_ids, layers, survival })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn layers(&self) -> &[OmicsLayer] {
        &self.layers
    }

    pub fn survival(&self) -> &SurvivalLabels {
        &self.survival
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn layer(&self, name: &str) -> Option<&OmicsLayer> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            sample_ids: rows.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            layers: self.layers.iter().map(|l| l.select_rows(rows)).collect(),
            survival: self.survival.select(rows),
        }
    }

    /// Replaces the survival labels, keeping everything else.
    pub fn with_survival(&self, survival: SurvivalLabels) -> Result<Self> {
        Self::new(self.sample_ids.clone(), self.layers.clone(), survival)
    }
}

/// A column of the concatenated feature matrix traced back to its layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureRef {
    pub layer_name: String,
    pub feature_name: String,
    pub global_index: usize,
}

struct Table {
    header: Vec<String>,
    rows: Vec<(String, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').has_headers(true).flexible(false).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.first().map(String::as_str) != Some("sample_id") {
        return Err(Error::Malformed { file, reason: "first header column must be sample_id".into() });
    }
    let mut rows = Vec::new();
    let mut ids = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let id = record[0].to_owned();
        if !ids.insert(id.clone()) {
            return Err(Error::DuplicateSample { file, id });
        }
        rows.push((id, record.iter().skip(1).map(str::to_owned).collect()));
    }
    Ok(Table { header: header[1..].to_vec(), rows })
}

fn parse_cell(raw: &str, file: &str, line: usize, column: usize) -> Result<f64> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric { file: file.to_owned(), line, column, value: raw.to_owned() }),
    }
}

/// Loads a dataset directory. Samples are aligned on the intersection of ids
/// present in every file and ordered by id; layers are ordered by name.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<MultiOmicsDataset> {
    let root = root.as_ref();
    let survival_path = root.join(SURVIVAL_FILE);
    if !survival_path.is_file() {
        return Err(Error::MissingSurvivalFile(root.to_path_buf()));
    }

    let mut layer_paths = BTreeMap::new();
    for entry in fs::read_dir(root)? {
        let path = entry?.path();
        let is_tsv = path.extension().is_some_and(|e| e == "tsv");
        if !is_tsv || path.file_name().is_some_and(|f| f == SURVIVAL_FILE) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            layer_paths.insert(stem.to_owned(), path.clone());
        }
    }
    if layer_paths.is_empty() {
        return Err(Error::NoLayers(root.to_path_buf()));
    }

    let survival_table = read_table(&survival_path)?;
    if survival_table.header != ["time", "event"] {
        return Err(Error::Malformed {
            file: survival_path.display().to_string(),
            reason: "expected header sample_id\ttime\tevent".into(),
        });
    }
    let layer_tables = layer_paths
        .iter()
        .map(|(name, path)| read_table(path).map(|t| (name.clone(), path.display().to_string(), t)))
        .collect::<Result<Vec<_>>>()?;

    let mut common: BTreeSet<&str> = survival_table.rows.iter().map(|(id, _)| id.as_str()).collect();
    for (_, _, table) in &layer_tables {
        let ids: HashSet<&str> = table.rows.iter().map(|(id, _)| id.as_str()).collect();
        common.retain(|id| ids.contains(id));
    }
    if common.is_empty() {
        return Err(Error::EmptySampleIntersection);
    }
    let sample_ids: Vec<String> = common.iter().map(|s| (*s).to_owned()).collect();
    let n = sample_ids.len();

    let survival_file = survival_path.display().to_string();
    let by_id: BTreeMap<&str, (usize, &Vec<String>)> =
        survival_table.rows.iter().enumerate().map(|(line, (id, cells))| (id.as_str(), (line + 2, cells))).collect();
    let mut time = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    for id in &sample_ids {
        let (line, cells) = by_id[id.as_str()];
        time.push(parse_cell(&cells[0], &survival_file, line, 2)?);
        let e = parse_cell(&cells[1], &survival_file, line, 3)?;
        if e != 0.0 && e != 1.0 {
            return Err(Error::Malformed { file: survival_file, reason: format!("event must be 0 or 1 (line {line})") });
        }
        event.push(e == 1.0);
    }
    let survival = SurvivalLabels::new(time, event)?;

    let mut layers = Vec::with_capacity(layer_tables.len());
    for (name, file, table) in layer_tables {
        let index: BTreeMap<&str, (usize, &Vec<String>)> =
            table.rows.iter().enumerate().map(|(line, (id, cells))| (id.as_str(), (line + 2, cells))).collect();
        let width = table.header.len();
        let mut values = Array2::zeros((n, width));
        for (row, id) in sample_ids.iter().enumerate() {
            let (line, cells) = index[id.as_str()];
            for (col, raw) in cells.iter().enumerate() {
                values[[row, col]] = parse_cell(raw, &file, line, col + 2)?;
            }
        }
        layers.push(OmicsLayer::new(name, table.header, values)?);
    }

    MultiOmicsDataset::new(sample_ids, layers, survival)
}

/// Writes a dataset in the directory layout accepted by [`load_dataset`].
pub fn write_dataset(dataset: &MultiOmicsDataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    fs::create_dir_all(root)?;
    for layer in dataset.layers() {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_path(root.join(format!("{}.tsv", layer.name())))?;
        let mut header = vec!["sample_id".to_owned()];
        header.extend(layer.feature_names().iter().cloned());
        w.write_record(&header)?;
        for (i, id) in dataset.sample_ids().iter().enumerate() {
            let mut record = vec![id.clone()];
            record.extend(layer.values().row(i).iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
    }
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_path(root.join(SURVIVAL_FILE))?;
    w.write_record(["sample_id", "time", "event"])?;
    let s = dataset.survival();
    for (i, id) in dataset.sample_ids().iter().enumerate() {
        w.write_record([id.clone(), s.time()[i].to_string(), u8::from(s.event()[i]).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Population (divide-by-n) variance of each column.
pub fn column_variances(x: ArrayView2<f64>) -> Array1<f64> {
    let n = x.nrows() as f64;
    x.columns()
        .into_iter()
        .map(|c| {
            let mean = c.sum() / n;
            c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
        })
        .collect()
}

/// Indices of the `k` highest-variance columns, ascending. Ties go to the
/// lower column index.
pub fn variance_topk(x: ArrayView2<f64>, k: usize) -> Vec<usize> {
    if x.ncols() == 0 || x.nrows() == 0 {
        return Vec::new();
    }
    let var = column_variances(x);
    let mut order: Vec<usize> = (0..x.ncols()).collect();
    order.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
    order.truncate(k.min(x.ncols()));
    order.sort_unstable();
    order
}

/// Number of columns [`concat_selected`] produces for layers of the given
/// widths under a per-layer budget `k`.
pub fn selected_width(layer_widths: &[usize], k: usize) -> usize {
    layer_widths.iter().map(|&w| w.min(k)).sum()
}

/// Concatenates the selected columns of every layer, layer by layer, in
/// ascending original index.
pub fn concat_selected(dataset: &MultiOmicsDataset, per_layer: &[Vec<usize>]) -> Result<(Array2<f64>, Vec<FeatureRef>)> {
    if per_layer.len() != dataset.layers().len() {
        return Err(Error::DimensionMismatch { expected: dataset.layers().len(), got: per_layer.len() });
    }
    let width: usize = per_layer.iter().map(Vec::len).sum();
    let mut out = Array2::zeros((dataset.n_samples(), width));
    let mut refs = Vec::with_capacity(width);
    for (layer, indices) in dataset.layers().iter().zip(per_layer) {
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        for idx in sorted {
            if idx >= layer.n_features() {
                return Err(Error::IndexOutOfRange { index: idx, width: layer.n_features() });
            }
            let g = refs.len();
            out.column_mut(g).assign(&layer.values().column(idx));
            refs.push(FeatureRef {
                layer_name: layer.name().to_owned(),
                feature_name: layer.feature_names()[idx].clone(),
                global_index: g,
            });
        }
    }
    Ok((out, refs))
}

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Scaler {
    pub fn fit(train: ArrayView2<f64>) -> Result<Self> {
        if train.nrows() < 2 {
            return Err(Error::InvalidInput(format!("z-scoring needs at least 2 rows, got {}", train.nrows())));
        }
        let n = train.nrows() as f64;
        let mean = train.sum_axis(Axis(0)) / n;
        let std = train
            .columns()
            .into_iter()
            .zip(mean.iter())
            .map(|(c, &m)| {
                let s = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
                if s <= DEGENERATE_STD {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.width() {
            return Err(Error::DimensionMismatch { expected: self.width(), got: x.ncols() });
        }
        Ok((&x - &self.mean) / &self.std)
    }
}

pub fn zscore_fit(train: ArrayView2<f64>) -> Result<Scaler> {
    Scaler::fit(train)
}

pub fn zscore_apply(scaler: &Scaler, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    scaler.apply(x)
}
