//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p omicsurv --release --test acceptance`; pass
//! criterion numbers (`-- 1 4 7`) to run a subset.

#[path = "../common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use common::{perturb_rows, planted_dataset, planted_global_indices};
use omicsurv::concrete::{
    concrete_backward, concrete_forward_eval, concrete_forward_with_gumbel, gumbel_sample, temperature, ConcreteLayer,
};
use omicsurv::data::{
    concat_selected, load_dataset, variance_topk, zscore_apply, zscore_fit, MultiOmicsDataset, OmicsLayer, SurvivalLabels,
};
use omicsurv::integrators::{Autoencoder, ConcreteAutoencoder, FingerprintModel, FittedState, ModelConfig, ModelKind};
use omicsurv::nn::{Mode, TrainNoise};
use omicsurv::pipeline::{cross_validate, make_folds, run_fold_detailed, PipelineConfig};
use omicsurv::report::report_csv;
use omicsurv::seed::rng_from_seed;
use omicsurv::survival::{concordance_index, cox_fit, cox_neural_loss, km_estimate, logrank_test};

/// Directory holding one sub-directory per cohort (e.g. `SKCM/`) in the
/// dataset TSV layout.
const TCGA_DIR_ENV: &str = "OMICSURV_TCGA_DIR";

struct Outcome {
    pass: bool,
    detail: String,
}

/// Collects individual checks; the criterion passes when all of them do.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failed.push(what.into());
        }
    }

    fn close(&mut self, got: f64, want: f64, tol: f64, what: &str) {
        self.check((got - want).abs() <= tol, format!("{what}: got {got}, want {want} (tol {tol:e})"));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self) -> Outcome {
        let pass = self.failed.is_empty();
        let mut parts = self.notes;
        parts.extend(self.failed.into_iter().map(|f| format!("FAILED {f}")));
        Outcome { pass, detail: parts.join("; ") }
    }
}

fn labels(t: &[f64], e: &[bool]) -> SurvivalLabels {
    SurvivalLabels::new(t.to_vec(), e.to_vec()).unwrap()
}

fn random_labels(n: usize, seed: u64) -> SurvivalLabels {
    let mut rng = rng_from_seed(seed);
    // integer times so that ties occur
    let t = (0..n).map(|_| rng.random_range(1..=n as u32 / 2 + 1) as f64).collect();
    let mut e: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
    e[0] = true;
    SurvivalLabels::new(t, e).unwrap()
}

// ---------------------------------------------------------------- oracles

fn oracle_cindex(pred: &[f64], l: &SurvivalLabels) -> f64 {
    let (t, e) = (l.time(), l.event());
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..t.len() {
        for j in 0..t.len() {
            // i is known to fail before j
            let earlier = e[i] && (t[i] < t[j] || (t[i] == t[j] && !e[j]));
            if !earlier {
                continue;
            }
            den += 1.0;
            num += if pred[i] > pred[j] {
                1.0
            } else if pred[i] == pred[j] {
                0.5
            } else {
                0.0
            };
        }
    }
    num / den
}

fn oracle_km(l: &SurvivalLabels, at: f64) -> f64 {
    let (t, e) = (l.time(), l.event());
    let mut times: Vec<f64> = t.iter().zip(e).filter(|(_, &ev)| ev).map(|(&x, _)| x).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut s = 1.0;
    for u in times.into_iter().filter(|&u| u <= at) {
        let n = t.iter().filter(|&&x| x >= u).count() as f64;
        let d = t.iter().zip(e).filter(|(&x, &ev)| ev && x == u).count() as f64;
        s *= 1.0 - d / n;
    }
    s
}

fn oracle_logrank_chi2(l: &SurvivalLabels, g: &[bool]) -> f64 {
    let (t, e) = (l.time(), l.event());
    let mut times: Vec<f64> = t.iter().zip(e).filter(|(_, &ev)| ev).map(|(&x, _)| x).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let (mut o_minus_e, mut var) = (0.0, 0.0);
    for u in times {
        let at_risk: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= u).collect();
        let n = at_risk.len() as f64;
        let n1 = at_risk.iter().filter(|&&i| g[i]).count() as f64;
        let d = at_risk.iter().filter(|&&i| e[i] && t[i] == u).count() as f64;
        let d1 = at_risk.iter().filter(|&&i| g[i] && e[i] && t[i] == u).count() as f64;
        o_minus_e += d1 - d * n1 / n;
        if n > 1.0 {
            var += d * (n1 / n) * (1.0 - n1 / n) * (n - d) / (n - 1.0);
        }
    }
    if var > 0.0 {
        o_minus_e * o_minus_e / var
    } else {
        0.0
    }
}

fn oracle_cox_loss(log_h: &[f64], l: &SurvivalLabels) -> f64 {
    let (t, e) = (l.time(), l.event());
    let mut total = 0.0;
    for i in (0..t.len()).filter(|&i| e[i]) {
        let risk: f64 = (0..t.len()).filter(|&j| t[j] >= t[i]).map(|j| log_h[j].exp()).sum();
        total += log_h[i] - risk.ln();
    }
    -total / l.n_events() as f64
}

fn oracle_cox_loglik(x: &[f64], l: &SurvivalLabels, beta: f64, penalty: f64) -> f64 {
    let eta: Vec<f64> = x.iter().map(|v| v * beta).collect();
    -oracle_cox_loss(&eta, l) * l.n_events() as f64 - 0.5 * penalty * beta * beta
}

/// Dense grid over [-10, 10] refined by repeated local grids.
fn grid_argmax(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    let mut best = 0.0;
    for _ in 0..8 {
        let step = (hi - lo) / 2000.0;
        let mut best_v = f64::NEG_INFINITY;
        for k in 0..=2000 {
            let b = lo + step * k as f64;
            let v = f(b);
            if v > best_v {
                best_v = v;
                best = b;
            }
        }
        lo = best - 2.0 * step;
        hi = best + 2.0 * step;
    }
    best
}

// ------------------------------------------------------------ criterion 1

fn criterion_1() -> Outcome {
    let mut c = Checks::default();
    let tol = 1e-6;
    let all3 = labels(&[1.0, 2.0, 3.0], &[true; 3]);
    c.close(concordance_index(&[3.0, 2.0, 1.0], &all3).unwrap(), 1.0, tol, "C-index concordant");
    c.close(concordance_index(&[1.0, 2.0, 3.0], &all3).unwrap(), 0.0, tol, "C-index anti-concordant");
    let mixed = labels(&[1.0, 2.0, 3.0], &[true, false, true]);
    c.close(concordance_index(&[3.0, 1.0, 2.0], &mixed).unwrap(), 1.0, tol, "C-index censored middle");
    c.close(concordance_index(&[0.4; 3], &all3).unwrap(), 0.5, tol, "C-index all ties");
    for seed in 0..50 {
        let l = random_labels(25, seed);
        let mut rng = rng_from_seed(seed + 500);
        // coarse predictions so that ties occur too
        let pred: Vec<f64> = (0..25).map(|_| (rng.random::<f64>() * 6.0).floor()).collect();
        c.close(concordance_index(&pred, &l).unwrap(), oracle_cindex(&pred, &l), tol, "C-index vs brute force");
    }

    let km = km_estimate(&all3);
    c.check(km.event_times == [1.0, 2.0, 3.0], "KM event times");
    for (s, want) in km.survival.iter().zip([2.0 / 3.0, 1.0 / 3.0, 0.0]) {
        c.close(*s, want, tol, "KM all events");
    }
    let tied = km_estimate(&labels(&[1.0, 1.0, 2.0], &[true, false, true]));
    c.close(tied.survival_at(1.0), 2.0 / 3.0, tol, "KM S(1) with censored tie");
    c.close(tied.survival_at(2.0), 0.0, tol, "KM S(2)");
    let censored = km_estimate(&labels(&[1.0, 2.0], &[false, false]));
    c.check(censored.event_times.is_empty() && censored.survival_at(5.0) == 1.0, "KM all censored");
    for seed in 0..20 {
        let l = random_labels(30, 900 + seed);
        let curve = km_estimate(&l);
        for u in 0..=16 {
            let u = u as f64 + 0.5;
            c.close(curve.survival_at(u), oracle_km(&l, u), tol, "KM vs product-limit oracle");
        }
    }

    let same = labels(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0], &[true; 6]);
    let g = [true, true, true, false, false, false];
    let r = logrank_test(&same, &g).unwrap();
    c.close(r.chi2, 0.0, tol, "logrank identical chi2");
    c.close(r.p_value, 1.0, tol, "logrank identical p");
    let split = labels(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0], &[true; 6]);
    let r = logrank_test(&split, &g).unwrap();
    // O - E = 3 - 1.15, V = 0.25 + 0.24 + 0.1875
    let hand = 1.85f64.powi(2) / 0.6775;
    c.close(r.chi2, hand, tol, "logrank separated chi2");
    c.check(r.p_value < 0.05, format!("logrank separated p {} < 0.05", r.p_value));
    c.check(logrank_test(&split, &[false; 6]).is_err(), "logrank empty group is an error");
    for seed in 0..20 {
        let l = random_labels(30, 1200 + seed);
        let mut rng = rng_from_seed(seed);
        let mut grp: Vec<bool> = (0..30).map(|_| rng.random_bool(0.5)).collect();
        grp[0] = true;
        grp[1] = false;
        c.close(logrank_test(&l, &grp).unwrap().chi2, oracle_logrank_chi2(&l, &grp), tol, "logrank vs hypergeometric oracle");
    }

    let (single, _) = cox_neural_loss(&[1.7], &labels(&[5.0], &[true])).unwrap();
    c.close(single, 0.0, tol, "Cox loss single sample");
    let (two, _) = cox_neural_loss(&[0.0, 0.0], &labels(&[2.0, 1.0], &[true, true])).unwrap();
    c.close(two, std::f64::consts::LN_2 / 2.0, tol, "Cox loss two samples");
    for seed in 0..20 {
        let l = random_labels(20, 1500 + seed);
        let mut rng = rng_from_seed(seed);
        let h: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
        c.close(cox_neural_loss(&h, &l).unwrap().0, oracle_cox_loss(&h, &l), tol, "Cox loss vs definition");
    }

    // perfectly separated: group 1 dies first
    let x = [0.0, 0.0, 1.0, 1.0];
    let sep = labels(&[4.0, 3.0, 2.0, 1.0], &[true; 4]);
    let xm = Array2::from_shape_vec((4, 1), x.to_vec()).unwrap();
    let free = cox_fit(xm.view(), &sep, 0.0).unwrap();
    c.check(free.beta[0] > 0.0 && !free.converged, "unpenalized separable fit diverges upward");
    let ridge = cox_fit(xm.view(), &sep, 0.1).unwrap();
    let want = grid_argmax(|b| oracle_cox_loglik(&x, &sep, b, 0.1));
    c.check(ridge.beta[0] > 0.0, "penalized separable beta > 0");
    c.close(ridge.beta[0], want, 1e-3, "cox_fit (penalty 0.1) vs grid oracle");
    let x = [0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
    let null = labels(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], &[true; 8]);
    let fit = cox_fit(Array2::from_shape_vec((8, 1), x.to_vec()).unwrap().view(), &null, 0.0).unwrap();
    c.close(
        fit.beta[0],
        grid_argmax(|b| oracle_cox_loglik(&x, &null, b, 0.0)),
        1e-3,
        "cox_fit balanced covariate vs grid oracle",
    );
    for seed in 0..10 {
        let l = random_labels(40, 1800 + seed);
        let mut rng = rng_from_seed(seed + 77);
        let x: Vec<f64> = l.time().iter().map(|t| -0.1 * t + rng.random::<f64>() * 2.0).collect();
        let fit = cox_fit(Array2::from_shape_vec((40, 1), x.clone()).unwrap().view(), &l, 0.0).unwrap();
        c.close(fit.beta[0], grid_argmax(|b| oracle_cox_loglik(&x, &l, b, 0.0)), 1e-3, "cox_fit random vs grid oracle");
    }
    c.note("worked examples and randomized oracles matched");
    c.finish()
}

// ------------------------------------------------------------ criterion 2

fn random_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(&mut rng))
}

fn labels_for(x: &Array2<f64>, seed: u64) -> SurvivalLabels {
    let mut rng = rng_from_seed(seed);
    let t = x.rows().into_iter().map(|r| -rng.random_range(0.05f64..1.0).ln() / r[0].exp()).collect();
    let mut e: Vec<bool> = (0..x.nrows()).map(|_| rng.random_bool(0.7)).collect();
    e[0] = true;
    SurvivalLabels::new(t, e).unwrap()
}

/// Relative error with a small floor for entries that are essentially zero.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// Odd-numbered slices are biases; moving them off zero keeps rows away
/// from ReLU kinks where central differences are meaningless.
fn jitter_biases(params: &mut [&mut [f64]], seed: u64) {
    let mut rng = rng_from_seed(seed);
    for p in params.iter_mut().skip(1).step_by(2) {
        for v in p.iter_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
}

/// Central differences over every parameter slice; returns the worst
/// relative error.
fn fd_worst<M>(model: &mut M, grads: &[Vec<f64>], params: fn(&mut M) -> Vec<&mut [f64]>, eval: impl Fn(&M) -> f64) -> f64 {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (p, g) in grads.iter().enumerate() {
        for (i, &gi) in g.iter().enumerate() {
            params(model)[p][i] += h;
            let up = eval(model);
            params(model)[p][i] -= 2.0 * h;
            let down = eval(model);
            params(model)[p][i] += h;
            worst = worst.max(rel_err(gi, (up - down) / (2.0 * h)));
        }
    }
    worst
}

fn criterion_2() -> Outcome {
    let mut c = Checks::default();
    let tol = 1e-4;
    let (mut sae_worst, mut csae_worst, mut layer_worst) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..6u64 {
        let n = 12 + seed as usize % 5;
        let d = 8 + 2 * seed as usize;
        let x = random_matrix(n, d, 100 + seed);
        let l = labels_for(&x, 200 + seed);
        let config = ModelConfig { n_fingerprints: 3, hidden: 6, ..ModelConfig::default() };

        let mut sae = Autoencoder::initialize(d, &config, true, &mut rng_from_seed(seed)).unwrap();
        jitter_biases(&mut sae.parameters_mut(), seed + 10);
        let eval = |m: &Autoencoder| {
            m.objective(x.view(), Some(&l), 0.01, Mode::Eval, &TrainNoise::NONE, &mut rng_from_seed(0)).unwrap()
        };
        let (parts, grads) = eval(&sae);
        c.check(parts.cox > 0.0 && parts.norm > 0.0, "objective has all three terms");
        sae_worst = sae_worst.max(fd_worst(&mut sae, &grads, Autoencoder::parameters_mut, |m| eval(m).0.total));

        let mut csae = ConcreteAutoencoder::initialize(d, &config, &mut rng_from_seed(seed)).unwrap();
        jitter_biases(&mut csae.parameters_mut()[1..], seed + 20);
        let g = gumbel_sample((3, d), &mut rng_from_seed(seed + 30));
        let eval = |m: &ConcreteAutoencoder| {
            m.objective_with_gumbel(x.view(), &l, 0.01, 0.7, g.view(), Mode::Eval, &TrainNoise::NONE, &mut rng_from_seed(0))
                .unwrap()
        };
        let (_, grads) = eval(&csae);
        csae_worst = csae_worst.max(fd_worst(&mut csae, &grads, ConcreteAutoencoder::parameters_mut, |m| eval(m).0.total));

        // the selection layer alone against a fixed linear read-out
        let layer = ConcreteLayer::new(4, d, 10.0, 0.1, 100, &mut rng_from_seed(seed + 40)).unwrap();
        let g = gumbel_sample((4, d), &mut rng_from_seed(seed + 50));
        let w = random_matrix(n, 4, seed + 60);
        let temp = 0.5 + seed as f64 * 0.3;
        let readout = |la: &Array2<f64>, xin: ArrayView2<f64>| {
            let l2 = ConcreteLayer::from_alphas(la.mapv(f64::exp), 10.0, 0.1, 100).unwrap();
            let (out, _, _) = concrete_forward_with_gumbel(xin, &l2, temp, g.view()).unwrap();
            (&out * &w).sum()
        };
        let (_, _, cache) = concrete_forward_with_gumbel(x.view(), &layer, temp, g.view()).unwrap();
        let grads = concrete_backward(&layer, &cache, w.view()).unwrap();
        let h = 1e-6;
        let mut la = layer.log_alpha().clone();
        for idx in 0..la.len() {
            let (r, col) = (idx / d, idx % d);
            la[[r, col]] += h;
            let up = readout(&la, x.view());
            la[[r, col]] -= 2.0 * h;
            let down = readout(&la, x.view());
            la[[r, col]] += h;
            layer_worst = layer_worst.max(rel_err(grads.log_alpha[[r, col]], (up - down) / (2.0 * h)));
        }
        let mut xp = x.clone();
        for idx in 0..xp.len() {
            let (r, col) = (idx / d, idx % d);
            xp[[r, col]] += h;
            let up = readout(layer.log_alpha(), xp.view());
            xp[[r, col]] -= 2.0 * h;
            let down = readout(layer.log_alpha(), xp.view());
            xp[[r, col]] += h;
            layer_worst = layer_worst.max(rel_err(grads.input[[r, col]], (up - down) / (2.0 * h)));
        }
    }
    c.check(sae_worst <= tol, format!("SAE objective worst relative error {sae_worst:.2e}"));
    c.check(csae_worst <= tol, format!("CSAE objective worst relative error {csae_worst:.2e}"));
    c.check(layer_worst <= tol, format!("concrete layer worst relative error {layer_worst:.2e}"));
    c.note(format!(
        "6 seeds, worst relative error: SAE {sae_worst:.1e}, CSAE {csae_worst:.1e}, concrete layer {layer_worst:.1e}"
    ));
    c.finish()
}

// ------------------------------------------------------------ criterion 3

fn criterion_3() -> Outcome {
    let mut c = Checks::default();
    let mut worst = 0.0f64;
    let mut rng = rng_from_seed(3);
    for seed in 0..200 {
        let n = rng.random_range(1..40);
        let l = random_labels(n.max(2), 3000 + seed);
        let n = l.len();
        let h: Vec<f64> = (0..n).map(|_| 3.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let shift = rng.random_range(-50.0..50.0);
        let shifted: Vec<f64> = h.iter().map(|v| v + shift).collect();
        let (a, ga) = cox_neural_loss(&h, &l).unwrap();
        let (b, gb) = cox_neural_loss(&shifted, &l).unwrap();
        worst = worst.max((a - b).abs());
        for (x, y) in ga.iter().zip(&gb) {
            worst = worst.max((x - y).abs());
        }

        let pred: Vec<f64> = h.iter().map(|v| (v * 2.0).round() / 2.0).collect();
        let Ok(base) = concordance_index(&pred, &l) else { continue };
        let transforms: [fn(f64) -> f64; 4] = [|v| v.exp(), |v| v * v * v, |v| 3.0 * v - 7.0, |v| v.atan()];
        for f in transforms {
            let mapped: Vec<f64> = pred.iter().map(|&v| f(v)).collect();
            c.check(concordance_index(&mapped, &l).unwrap() == base, "C-index changed under a monotone map");
        }
    }
    c.check(worst <= 1e-9, format!("Cox loss shift worst difference {worst:.2e}"));
    c.note(format!("200 random cases, worst loss/gradient shift difference {worst:.1e}"));
    c.finish()
}

// ------------------------------------------------------------ criterion 4

fn criterion_4() -> Outcome {
    let mut c = Checks::default();
    let ds = planted_dataset(4);
    let config = PipelineConfig { k_per_layer: 40, n_fingerprints: 8, hidden: 16, epochs: 40, ..PipelineConfig::default() };
    let folds = make_folds(ds.n_samples(), 5, 1, 4).unwrap();
    for kind in ModelKind::ALL {
        for fold in &folds[0][..2] {
            let (_, before) = run_fold_detailed(&ds, &fold.train, &fold.test, kind, &config, 21).unwrap();
            let changed = perturb_rows(&ds, &fold.test, 2.5);
            let (_, after) = run_fold_detailed(&changed, &fold.train, &fold.test, kind, &config, 21).unwrap();
            c.check(before.layer_selection == after.layer_selection, format!("{kind}: variance selection"));
            c.check(before.scaler == after.scaler, format!("{kind}: scaler"));
            c.check(before.model == after.model, format!("{kind}: model parameters"));
            c.check(before.selected_fingerprints == after.selected_fingerprints, format!("{kind}: fingerprint selection"));
            c.check(before.kmeans == after.kmeans, format!("{kind}: centroids"));
            c.check(before.cox == after.cox, format!("{kind}: Cox coefficients"));
        }
    }
    c.note("pca/ae/sae/csae over 2 folds, train-side state bit-identical after test-row perturbation");
    c.finish()
}

// ------------------------------------------------------------ criterion 5

/// Narrower network than the defaults (same epochs and optimizer) so that
/// 300 cross-validated fits finish in minutes on one core.
fn benchmark_config(seed: u64) -> PipelineConfig {
    PipelineConfig { n_fingerprints: 32, hidden: 128, folds: 5, repeats: 2, master_seed: seed, ..PipelineConfig::default() }
}

fn shuffled(ds: &MultiOmicsDataset, seed: u64) -> MultiOmicsDataset {
    let mut order: Vec<usize> = (0..ds.n_samples()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    ds.with_survival(ds.survival().select(&order)).unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_5() -> Outcome {
    let mut c = Checks::default();
    let (mut sae, mut ae, mut null) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..10u64 {
        let ds = planted_dataset(seed);
        let config = benchmark_config(seed);
        let s = cross_validate(&ds, ModelKind::Sae, &config).unwrap();
        let a = cross_validate(&ds, ModelKind::Ae, &config).unwrap();
        let z = cross_validate(&shuffled(&ds, 1000 + seed), ModelKind::Sae, &config).unwrap();
        c.check(s.folds.len() == 10, "5 folds x 2 repeats");
        eprintln!("  seed {seed}: sae {:.4} ae {:.4} shuffled {:.4}", s.mean_c_index, a.mean_c_index, z.mean_c_index);
        sae.push(s.mean_c_index);
        ae.push(a.mean_c_index);
        null.push(z.mean_c_index);
    }
    let (s, a, z) = (mean(&sae), mean(&ae), mean(&null));
    let wins = sae.iter().zip(&ae).filter(|(s, a)| s >= a).count();
    c.check(s > 0.65, format!("SAE mean {s:.4} > 0.65"));
    c.check((0.45..=0.55).contains(&z), format!("random-label mean {z:.4} in [0.45, 0.55]"));
    c.check(s >= a, format!("SAE mean {s:.4} >= AE mean {a:.4}"));
    c.note(format!("10 seeds: SAE {s:.4}, AE {a:.4}, shuffled-label SAE {z:.4}, SAE >= AE on {wins}/10 seeds"));
    c.finish()
}

// ------------------------------------------------------------ criterion 6

fn criterion_6() -> Outcome {
    let mut c = Checks::default();
    let ds = planted_dataset(6);
    let all: Vec<Vec<usize>> = ds.layers().iter().map(|l| (0..l.n_features()).collect()).collect();
    let (raw, _) = concat_selected(&ds, &all).unwrap();
    let x = zscore_apply(&zscore_fit(raw.view()).unwrap(), raw.view()).unwrap();
    let d = x.ncols();
    let planted = planted_global_indices();
    let chance = planted.len() as f64 / d as f64;
    let config = ModelConfig { n_fingerprints: 16, hidden: 64, epochs: 256, ..ModelConfig::default() };
    let runs = 20;
    let (mut enriched, mut worst_gap) = (0, 0.0f64);
    let mut enrichments = Vec::new();
    for seed in 0..runs {
        let mut m = FingerprintModel::new(ModelKind::Csae, config, seed);
        m.fit(x.view(), Some(ds.survival())).unwrap();
        let mut sel = m.selected_features().unwrap();
        let z = m.transform(x.view()).unwrap();
        for (k, &j) in sel.iter().enumerate() {
            c.check(z.column(k) == x.column(j), format!("seed {seed}: fingerprint {k} is not column {j}"));
        }
        sel.sort_unstable();
        sel.dedup();
        let hits = sel.iter().filter(|j| planted.contains(j)).count();
        let enrichment = hits as f64 / sel.len() as f64 / chance;
        enrichments.push(enrichment);
        if enrichment >= 5.0 {
            enriched += 1;
        }

        let Some(FittedState::Concrete(state)) = m.state() else { unreachable!("csae state") };
        let zeros = Array2::zeros(state.selector.log_alpha().dim());
        let (soft, _, _) = concrete_forward_with_gumbel(x.view(), &state.selector, 0.1, zeros.view()).unwrap();
        let hard = concrete_forward_eval(x.view(), &state.selector).unwrap();
        let gap = (&soft - &hard).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst_gap = worst_gap.max(gap);
    }
    let need = (0.8 * runs as f64).ceil() as usize;
    c.check(enriched >= need, format!("{enriched}/{runs} seeds reached 5x enrichment (need {need})"));
    c.check(worst_gap <= 1e-3, format!("eval/train worst abs difference {worst_gap:.2e} at T = 0.1"));
    c.note(format!("{enriched}/{runs} seeds at >= 5x enrichment (median {:.1}x), worst eval/train gap {worst_gap:.1e}", {
        let mut e = enrichments.clone();
        e.sort_by(f64::total_cmp);
        (e[runs as usize / 2 - 1] + e[runs as usize / 2]) / 2.0
    }));
    c.finish()
}

// ------------------------------------------------------------ criterion 7

fn criterion_7() -> Outcome {
    let mut c = Checks::default();
    for epochs in [2usize, 100, 256, 1000] {
        let layer = ConcreteLayer::new(2, 3, 10.0, 0.1, epochs, &mut rng_from_seed(0)).unwrap();
        c.check(temperature(0, &layer) == 10.0, format!("T(0) = 10 for B = {epochs}"));
        c.check(temperature(epochs, &layer) == 0.1, format!("T(B) = 0.1 for B = {epochs}"));
        c.close(temperature(epochs / 2, &layer), 1.0, 1e-12, &format!("T(B/2) for B = {epochs}"));
    }
    c.note("T(0)=10 and T(B)=0.1 exact, T(B/2)=1 to 1e-12 for B in {2, 100, 256, 1000}");
    c.finish()
}

// ------------------------------------------------------------ criterion 8

fn criterion_8() -> Outcome {
    let mut c = Checks::default();
    let ds = common::small_dataset(8, 120);
    for kind in [ModelKind::Pca, ModelKind::Sae] {
        let config = PipelineConfig {
            n_fingerprints: 4,
            hidden: 8,
            epochs: 12,
            folds: 10,
            repeats: 10,
            master_seed: 8,
            ..PipelineConfig::default()
        };
        let a = cross_validate(&ds, kind, &config).unwrap();
        let b = cross_validate(&ds, kind, &config).unwrap();
        c.check(a.folds.len() == 100, format!("{kind}: {} fold records", a.folds.len()));
        let mut keys: Vec<(usize, usize)> = a.folds.iter().map(|f| (f.repeat_index, f.fold_index)).collect();
        keys.dedup();
        c.check(keys.len() == 100, format!("{kind}: distinct fold keys"));
        c.check(report_csv(&a).unwrap().as_bytes() == report_csv(&b).unwrap().as_bytes(), format!("{kind}: report CSV differs"));
    }
    c.note("pca and sae: 100 fold records each, byte-identical report CSVs on rerun");
    c.finish()
}

// ------------------------------------------------------------ criterion 9

/// Cohort, clinical, gene expression, CNV, methylation, miRNA, mutation,
/// RPPA, total and used feature counts.
const COHORTS: [(&str, [usize; 9]); 17] = [
    ("BLCA", [9, 20225, 24776, 22124, 740, 16317, 189, 84380, 4938]),
    ("BRCA", [9, 20227, 24776, 19371, 737, 15358, 190, 80668, 4936]),
    ("COAD", [16, 17507, 24776, 21424, 740, 17569, 189, 82221, 4945]),
    ("ESCA", [17, 19076, 24776, 21941, 737, 9012, 193, 75752, 4947]),
    ("HNSC", [16, 20169, 24776, 21647, 735, 11752, 191, 79286, 4942]),
    ("KIRC", [14, 20230, 24776, 19456, 735, 9252, 189, 74652, 4938]),
    ("KIRP", [5, 20178, 24776, 21921, 738, 8486, 190, 76294, 4933]),
    ("LGG", [15, 20209, 24776, 21564, 740, 10760, 190, 78254, 4945]),
    ("LIHC", [3, 20078, 24776, 21739, 742, 8719, 190, 76247, 4935]),
    ("LUAD", [11, 20165, 24776, 21059, 739, 16060, 189, 82999, 4939]),
    ("LUSC", [20, 20232, 24776, 20659, 739, 15510, 189, 82125, 4948]),
    ("OV", [17, 19064, 24776, 19639, 731, 8347, 189, 72763, 4937]),
    ("PAAD", [26, 19932, 24776, 21586, 732, 9412, 190, 76654, 4948]),
    ("SARC", [45, 20206, 24776, 21724, 739, 8385, 193, 76068, 4977]),
    ("SKCM", [3, 20179, 24776, 21635, 741, 17731, 189, 85254, 4933]),
    ("STAD", [7, 16765, 24776, 21506, 743, 16870, 193, 80860, 4943]),
    ("UCEC", [24, 17507, 24776, 21692, 743, 19199, 189, 84130, 4956]),
];

const LAYER_NAMES: [&str; 7] = ["clinical", "gex", "cnv", "meth", "mirna", "mutation", "rppa"];

fn selected_width_of(ds: &MultiOmicsDataset) -> usize {
    let sel: Vec<Vec<usize>> = ds.layers().iter().map(|l| variance_topk(l.values().view(), 1000)).collect();
    concat_selected(ds, &sel).unwrap().1.len()
}

/// Three samples with layers of the listed widths.
fn shaped_dataset(widths: &[usize]) -> MultiOmicsDataset {
    let mut rng = rng_from_seed(9);
    let layers = LAYER_NAMES
        .iter()
        .zip(widths)
        .map(|(name, &w)| {
            let values = Array2::from_shape_simple_fn((3, w), || rng.random::<f64>());
            let names = (0..w).map(|i| format!("{name}_{i}")).collect();
            OmicsLayer::new(*name, names, values).unwrap()
        })
        .collect();
    let ids = vec!["a".into(), "b".into(), "c".into()];
    MultiOmicsDataset::new(ids, layers, labels(&[1.0, 2.0, 3.0], &[true; 3])).unwrap()
}

fn criterion_9() -> Outcome {
    let mut c = Checks::default();
    for (name, row) in COHORTS {
        let widths = &row[..7];
        c.check(widths.iter().sum::<usize>() == row[7], format!("{name}: layer widths do not add up to the total"));
        let got = selected_width_of(&shaped_dataset(widths));
        c.check(got == row[8], format!("{name}: selected width {got}, want {}", row[8]));
    }
    c.note("17 cohort shapes reproduce the used-feature counts (e.g. SKCM 4933)");
    match std::env::var_os(TCGA_DIR_ENV) {
        Some(root) => {
            let root = std::path::PathBuf::from(root);
            let mut checked = 0;
            for (name, row) in COHORTS {
                let dir = root.join(name);
                if !dir.is_dir() {
                    continue;
                }
                match load_dataset(&dir) {
                    Ok(ds) => {
                        let got = selected_width_of(&ds);
                        c.check(got == row[8], format!("{name} (real data): selected width {got}, want {}", row[8]));
                        checked += 1;
                    }
                    Err(e) => c.check(false, format!("{name}: {e}")),
                }
            }
            c.check(checked > 0, format!("no cohort directories found under {}", root.display()));
            c.note(format!("{checked} real cohorts checked"));
        }
        None => c.note(format!("real matrices not supplied (set {TCGA_DIR_ENV})")),
    }
    c.finish()
}

// ------------------------------------------------------------------ main

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all_pass = true;
    for (id, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        all_pass &= outcome.pass;
        println!(
            "criterion {id}: {} ({:.1}s) {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
