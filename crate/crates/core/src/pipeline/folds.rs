use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

/// Seed stream for fold shuffles.
const FOLD_STREAM: u64 = 0xF01D;

/// One train/test split; both index lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Repeated k-fold splits: `result[r][f]` is fold `f` of repeat `r`. Each
/// repeat shuffles `0..n` with its own derived seed and cuts the result into
/// `folds` contiguous blocks whose sizes differ by at most one.
pub fn make_folds(n: usize, folds: usize, repeats: usize, master_seed: u64) -> Result<Vec<Vec<Fold>>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidInput(format!("{n} samples cannot fill {folds} folds")));
    }
    let base = n / folds;
    let extra = n % folds;
    Ok((0..repeats)
        .map(|r| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng_from_seed(derive_seed(master_seed, &[FOLD_STREAM, r as u64])));
            let mut start = 0;
            (0..folds)
                .map(|f| {
                    let len = base + usize::from(f < extra);
                    let mut test = order[start..start + len].to_vec();
                    test.sort_unstable();
                    let mut train: Vec<usize> = order[..start].iter().chain(&order[start + len..]).copied().collect();
                    train.sort_unstable();
                    start += len;
                    Fold { train, test }
                })
                .collect()
        })
        .collect())
}
