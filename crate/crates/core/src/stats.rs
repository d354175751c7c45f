//! Small statistics helpers shared by the estimators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::aux_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Mean and naive standard error of independent values.
pub fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            std_error: f64::NAN,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, std_error, n }
}

/// Mean of correlated series with the standard error of batch means over
/// consecutive blocks of `block` values, taken within each series.
pub fn batch_means(series: &[Vec<f64>], block: usize) -> MeanSe {
    let block = block.max(1);
    let mut means = Vec::new();
    let mut total = 0.0;
    let mut n = 0;
    for s in series {
        total += s.iter().sum::<f64>();
        n += s.len();
        for chunk in s.chunks(block) {
            if chunk.len() == block {
                means.push(chunk.iter().sum::<f64>() / block as f64);
            }
        }
    }
    let mean = total / n.max(1) as f64;
    let se = mean_se(&means).std_error;
    MeanSe { mean, std_error: se, n }
}

/// Block bootstrap over `(sum, count)` blocks: returns the pooled mean and
/// the standard deviation of resampled pooled means.
pub fn block_bootstrap(blocks: &[(f64, usize)], n_boot: usize, seed: u64) -> MeanSe {
    let total: f64 = blocks.iter().map(|b| b.0).sum();
    let count: usize = blocks.iter().map(|b| b.1).sum();
    let mean = total / count.max(1) as f64;
    if blocks.len() < 2 || n_boot < 2 {
        return MeanSe {
            mean,
            std_error: 0.0,
            n: count,
        };
    }
    let mut rng = aux_rng(seed, 0xb007);
    let boots: Vec<f64> = (0..n_boot)
        .map(|_| {
            let (mut s, mut c) = (0.0, 0usize);
            for _ in 0..blocks.len() {
                let b = blocks[rng.random_range(0..blocks.len())];
                s += b.0;
                c += b.1;
            }
            s / c.max(1) as f64
        })
        .collect();
    let m = boots.iter().sum::<f64>() / n_boot as f64;
    let var = boots.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (n_boot - 1) as f64;
    MeanSe {
        mean,
        std_error: var.sqrt(),
        n: count,
    }
}

/// Upper critical value of the chi-square distribution at level `alpha`
/// (Wilson–Hilferty approximation; supports 0.05 and 0.01).
pub fn chi_square_critical(dof: usize, alpha: f64) -> f64 {
    let z = if alpha <= 0.01 { 2.326_347_874 } else { 1.644_853_627 };
    let k = dof as f64;
    let c = 2.0 / (9.0 * k);
    k * (1.0 - c + z * c.sqrt()).powi(3)
}

/// Area under the ROC curve of scores for positives vs negatives
/// (Mann–Whitney, ties counted half).
pub fn auc(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for item in &all[i..=j] {
            if item.1 {
                rank_sum += avg_rank;
            }
        }
        i = j + 1;
    }
    let (np, nn) = (positives.len() as f64, negatives.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}
