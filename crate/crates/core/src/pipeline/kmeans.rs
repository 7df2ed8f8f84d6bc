use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::KmeansConfig;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansModel {
    /// `k x p`.
    pub centroids: Array2<f64>,
    /// Training labels under the final centroids.
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Final inertia of every initialization, in run order.
    pub init_inertias: Vec<f64>,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &Array2<f64>, row: ArrayView1<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(centroid, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Nearest-centroid labels (Euclidean, lowest index on ties).
pub fn kmeans_assign(centroids: &Array2<f64>, z: ArrayView2<f64>) -> Result<Vec<usize>> {
    if z.ncols() != centroids.ncols() {
        return Err(Error::DimensionMismatch { expected: centroids.ncols(), got: z.ncols() });
    }
    Ok(z.rows().into_iter().map(|r| nearest(centroids, r).0).collect())
}

fn plus_plus_init<R: Rng + ?Sized>(z: ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = z.nrows();
    let mut centroids = Array2::zeros((k, z.ncols()));
    centroids.row_mut(0).assign(&z.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = z.rows().into_iter().map(|r| sq_dist(r, centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&z.row(pick));
        for (i, r) in z.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centroids.row(c)));
        }
    }
    centroids
}

fn lloyd(z: ArrayView2<f64>, mut centroids: Array2<f64>, cfg: &KmeansConfig) -> (Array2<f64>, Vec<usize>, f64) {
    let k = centroids.nrows();
    for _ in 0..cfg.max_iter {
        let assigned: Vec<(usize, f64)> = z.rows().into_iter().map(|r| nearest(&centroids, r)).collect();
        let mut sums = Array2::<f64>::zeros(centroids.dim());
        let mut counts = vec![0usize; k];
        for (row, &(c, _)) in z.rows().into_iter().zip(&assigned) {
            sums.row_mut(c).scaled_add(1.0, &row);
            counts[c] += 1;
        }
        let mut taken = vec![false; z.nrows()];
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                sums.row_mut(c).mapv_inplace(|v| v / count as f64);
            } else {
                // reseed from the point farthest from its centroid
                let far = (0..z.nrows())
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| assigned[a].1.total_cmp(&assigned[b].1).then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                sums.row_mut(c).assign(&z.row(far));
            }
        }
        let shift = (&sums - &centroids).rows().into_iter().map(|r| r.dot(&r).sqrt()).fold(0.0, f64::max);
        centroids = sums;
        if shift < cfg.tol {
            break;
        }
    }
    let mut inertia = 0.0;
    let labels = z
        .rows()
        .into_iter()
        .map(|r| {
            let (c, d) = nearest(&centroids, r);
            inertia += d;
            c
        })
        .collect();
    (centroids, labels, inertia)
}

/// Lloyd's algorithm from `cfg.n_init` k-means++ starts; keeps the run with
/// the lowest inertia (earliest run on ties).
pub fn kmeans_fit(z: ArrayView2<f64>, cfg: &KmeansConfig, seed: u64) -> Result<KmeansModel> {
    if cfg.k == 0 || cfg.n_init == 0 {
        return Err(Error::InvalidConfig("kmeans needs k >= 1 and n_init >= 1".into()));
    }
    if z.nrows() < cfg.k {
        return Err(Error::InvalidInput(format!("{} rows cannot form {} clusters", z.nrows(), cfg.k)));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kmeans input"));
    }
    let mut best: Option<(Array2<f64>, Vec<usize>, f64)> = None;
    let mut init_inertias = Vec::with_capacity(cfg.n_init);
    for run in 0..cfg.n_init {
        let mut rng = rng_from_seed(derive_seed(seed, &[run as u64]));
        let start = plus_plus_init(z, cfg.k, &mut rng);
        let result = lloyd(z, start, cfg);
        init_inertias.push(result.2);
        if best.as_ref().is_none_or(|b| result.2 < b.2) {
            best = Some(result);
        }
    }
    let (centroids, labels, inertia) = best.expect("n_init >= 1");
    Ok(KmeansModel { centroids, labels, inertia, init_inertias })
}

impl KmeansModel {
    pub fn assign(&self, z: ArrayView2<f64>) -> Result<Vec<usize>> {
        kmeans_assign(&self.centroids, z)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len_of(Axis(0))];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}
