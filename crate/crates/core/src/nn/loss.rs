use ndarray::{Array2, ArrayView2};

use super::DenseNetwork;
use crate::error::{Error, Result};

/// Squared error summed over features and averaged over samples only, with
/// its gradient with respect to `x_hat`.
pub fn mse_loss(x: ArrayView2<f64>, x_hat: ArrayView2<f64>) -> Result<(f64, Array2<f64>)> {
    if x.dim() != x_hat.dim() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: x_hat.len() });
    }
    let n = x.nrows().max(1) as f64;
    let diff = &x_hat - &x;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff * (2.0 / n)))
}

/// `lambda` times the summed squared Frobenius norms of every weight matrix
/// (biases excluded), with per-network, per-layer gradients `2 lambda W`.
pub fn l2_penalty(nets: &[&DenseNetwork], lambda: f64) -> (f64, Vec<Vec<Array2<f64>>>) {
    let mut loss = 0.0;
    let grads = nets
        .iter()
        .map(|net| {
            net.layers()
                .iter()
                .map(|l| {
                    loss += l.weight.iter().map(|w| w * w).sum::<f64>();
                    &l.weight * (2.0 * lambda)
                })
                .collect()
        })
        .collect();
    (lambda * loss, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer};
    use ndarray::{array, Array1};

    fn single(weight: Array2<f64>) -> DenseNetwork {
        let out = weight.ncols();
        DenseNetwork::new(vec![DenseLayer { weight, bias: Array1::from_elem(out, 5.0), activation: Activation::Identity }])
            .unwrap()
    }

    #[test]
    fn mse_examples() {
        let x = array![[0.0, 0.0]];
        let (l, _) = mse_loss(x.view(), x.view()).unwrap();
        assert_eq!(l, 0.0);
        let (l, g) = mse_loss(x.view(), array![[1.0, 1.0]].view()).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(g, array![[2.0, 2.0]]);
        let a = array![[1.0, -2.0], [0.5, 3.0]];
        let b = array![[0.0, 1.0], [2.0, 2.0]];
        assert_eq!(mse_loss(a.view(), b.view()).unwrap().0, mse_loss(b.view(), a.view()).unwrap().0);
        assert!(mse_loss(a.view(), x.view()).is_err());
    }

    #[test]
    fn l2_examples() {
        let net = single(array![[1.0, 2.0], [2.0, 1.0]]);
        assert_eq!(l2_penalty(&[&net], 0.0).0, 0.0);
        let (l, g) = l2_penalty(&[&net], 0.001);
        assert!((l - 0.01).abs() < 1e-15);
        assert_eq!(g[0][0], array![[0.002, 0.004], [0.004, 0.002]]);
        let doubled = single(array![[2.0, 4.0], [4.0, 2.0]]);
        assert!((l2_penalty(&[&doubled], 0.001).0 - 4.0 * l).abs() < 1e-15);
    }
}
