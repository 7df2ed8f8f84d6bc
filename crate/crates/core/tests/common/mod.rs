#![allow(dead_code)]

use omicsurv::data::{MultiOmicsDataset, OmicsLayer};
use omicsurv::pipeline::PipelineConfig;
use omicsurv::report::{generate_synthetic, PlantedFeature, SyntheticSpec};

/// 300 samples, three layers of 100 standard normal features, five planted
/// hazard features, 30% censoring.
pub fn planted_spec(seed: u64) -> SyntheticSpec {
    let planted = [("rna", 3, 1.0), ("rna", 40, -1.0), ("cnv", 11, 0.8), ("cnv", 77, -0.8), ("meth", 25, 1.0)];
    SyntheticSpec {
        n_samples: 300,
        layers: vec![("cnv".into(), 100), ("meth".into(), 100), ("rna".into(), 100)],
        planted: planted.iter().map(|&(layer, index, weight)| PlantedFeature { layer: layer.into(), index, weight }).collect(),
        censoring_rate: 0.3,
        seed,
    }
}

/// Global column indices of the planted features once all 300 features are
/// kept (layers concatenated in name order: cnv, meth, rna).
pub fn planted_global_indices() -> Vec<usize> {
    vec![11, 77, 100 + 25, 200 + 3, 200 + 40]
}

pub fn planted_dataset(seed: u64) -> MultiOmicsDataset {
    generate_synthetic(&planted_spec(seed)).unwrap()
}

pub fn small_dataset(seed: u64, n: usize) -> MultiOmicsDataset {
    let spec = SyntheticSpec {
        n_samples: n,
        layers: vec![("a".into(), 12), ("b".into(), 8)],
        planted: vec![PlantedFeature { layer: "a".into(), index: 1, weight: 1.5 }],
        censoring_rate: 0.25,
        seed,
    };
    generate_synthetic(&spec).unwrap()
}

/// Reduced network so that many folds fit in a test run.
pub fn fast_config() -> PipelineConfig {
    PipelineConfig {
        n_fingerprints: 8,
        hidden: 16,
        epochs: 30,
        folds: 3,
        repeats: 1,
        master_seed: 5,
        ..PipelineConfig::default()
    }
}

/// Replaces the given rows of every layer and of the survival labels.
pub fn perturb_rows(ds: &MultiOmicsDataset, rows: &[usize], salt: f64) -> MultiOmicsDataset {
    let layers = ds
        .layers()
        .iter()
        .map(|l| {
            let mut v = l.values().clone();
            for &r in rows {
                for (j, x) in v.row_mut(r).iter_mut().enumerate() {
                    *x = salt * (1.0 + j as f64).sin() * 50.0 - *x;
                }
            }
            OmicsLayer::new(l.name(), l.feature_names().to_vec(), v).unwrap()
        })
        .collect();
    let mut time = ds.survival().time().to_vec();
    let mut event = ds.survival().event().to_vec();
    for &r in rows {
        time[r] = time[r] * 3.0 + salt.abs();
        event[r] = !event[r];
    }
    MultiOmicsDataset::new(ds.sample_ids().to_vec(), layers, omicsurv::data::SurvivalLabels::new(time, event).unwrap()).unwrap()
}
