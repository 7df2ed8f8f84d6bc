use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SVD_MAX_ITER: usize = 10_000;

/// Principal components of a centered training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// `F x d`, orthonormal rows ordered by decreasing singular value.
    pub components: Array2<f64>,
    pub singular_values: Vec<f64>,
    /// Component variances (squared singular values over `n - 1`).
    pub explained_variance: Vec<f64>,
}

/// Fits the top `n_components` principal components. Fewer are returned when
/// `n_components > min(n - 1, d)`.
pub fn pca_fit(x: ArrayView2<f64>, n_components: usize) -> Result<Pca> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(Error::InvalidInput(format!("PCA needs at least 2 rows, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA input"));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x - &mean;
    let m = DMatrix::from_fn(n, d, |i, j| centered[[i, j]]);
    let svd = m.try_svd(false, true, f64::EPSILON, SVD_MAX_ITER).ok_or(Error::SvdFailed)?;
    let v_t = svd.v_t.ok_or(Error::SvdFailed)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let keep = n_components.min(n - 1).min(d);
    let mut components = Array2::zeros((keep, d));
    let mut singular_values = Vec::with_capacity(keep);
    for (row, &idx) in order.iter().take(keep).enumerate() {
        let mut pivot = 0;
        for j in 0..d {
            if v_t[(idx, j)].abs() > v_t[(idx, pivot)].abs() {
                pivot = j;
            }
        }
        // largest loading positive, so the sign does not depend on the solver
        let sign = if v_t[(idx, pivot)] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[[row, j]] = sign * v_t[(idx, j)];
        }
        singular_values.push(svd.singular_values[idx]);
    }
    let explained_variance = singular_values.iter().map(|s| s * s / (n - 1) as f64).collect();
    Ok(Pca { mean, components, singular_values, explained_variance })
}

impl Pca {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), got: x.ncols() });
        }
        Ok((&x - &self.mean).dot(&self.components.t()))
    }
}
