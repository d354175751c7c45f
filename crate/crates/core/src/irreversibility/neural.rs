use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mlp::{Adam, Cache, Mlp};
use super::{Estimator, PhiEstimate, TransitionDataset};
use crate::error::{Error, Result};
use crate::rng::aux_rng;
use crate::stats::block_bootstrap;

pub const MIN_PAIRS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralSettings {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Every `validation_period`-th group is held out (5 → 20%).
    pub validation_period: usize,
    pub n_bootstrap: usize,
    pub seed: u64,
}

impl Default for NeuralSettings {
    fn default() -> Self {
        NeuralSettings {
            hidden: vec![64, 64],
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 60,
            patience: 8,
            validation_period: 5,
            n_bootstrap: 200,
            seed: 0,
        }
    }
}

/// Trained antisymmetric score `s(x, x') = h(x, x') − h(x', x)` on
/// standardized coordinates.
#[derive(Debug, Clone)]
pub struct NeuralScore {
    net: Mlp,
    shift: Vec<f64>,
    scale: Vec<f64>,
}

impl NeuralScore {
    fn standardize(&self, pair: &[f64], forward: &mut Vec<f64>, backward: &mut Vec<f64>) {
        let d = self.shift.len();
        forward.clear();
        backward.clear();
        for k in 0..2 * d {
            forward.push((pair[k] - self.shift[k % d]) / self.scale[k % d]);
        }
        backward.extend_from_slice(&forward[d..]);
        backward.extend_from_slice(&forward[..d]);
    }

    /// Score of one concatenated `(start, end)` pair.
    pub fn score(&self, pair: &[f64]) -> f64 {
        let mut cache = self.net.new_cache();
        let (mut f, mut b) = (Vec::new(), Vec::new());
        self.standardize(pair, &mut f, &mut b);
        self.net.forward(&f, &mut cache) - self.net.forward(&b, &mut cache)
    }

    /// Mean score over the dataset.
    pub fn mean_score(&self, data: &TransitionDataset) -> f64 {
        (0..data.len()).map(|i| self.score(data.pair(i))).sum::<f64>() / data.len().max(1) as f64
    }
}

fn objective(s: f64) -> f64 {
    s - (-s).exp() + 1.0
}

fn mean_objective(score: &NeuralScore, data: &TransitionDataset) -> f64 {
    (0..data.len()).map(|i| objective(score.score(data.pair(i)))).sum::<f64>() / data.len().max(1) as f64
}

struct Fit {
    score: NeuralScore,
    best_validation: f64,
    epochs: usize,
    improved: bool,
}

fn train(train: &TransitionDataset, validation: &TransitionDataset, settings: &NeuralSettings) -> Fit {
    let d = train.dim;
    let mut shift = vec![0.0; d];
    let mut sq = vec![0.0; d];
    let n = train.len();
    for i in 0..n {
        for (k, v) in train.pair(i).iter().enumerate() {
            shift[k % d] += v;
            sq[k % d] += v * v;
        }
    }
    let count = (2 * n).max(1) as f64;
    let scale: Vec<f64> = (0..d)
        .map(|k| {
            let m = shift[k] / count;
            let var = sq[k] / count - m * m;
            if var > 0.0 { var.sqrt() } else { 1.0 }
        })
        .collect();
    shift.iter_mut().for_each(|s| *s /= count);

    let mut rng = aux_rng(settings.seed, 0x6e6e);
    let mut sizes = vec![2 * d];
    sizes.extend_from_slice(&settings.hidden);
    sizes.push(1);
    let mut score = NeuralScore {
        net: Mlp::new(&sizes, &mut rng),
        shift,
        scale,
    };
    let mut best = score.clone();
    let mut best_validation = mean_objective(&score, validation);
    let initial = best_validation;
    let mut opt = Adam::new(score.net.n_params(), settings.learning_rate);
    let mut cache_f: Cache = score.net.new_cache();
    let mut cache_b: Cache = score.net.new_cache();
    let mut grads = vec![0.0; score.net.n_params()];
    let mut order: Vec<usize> = (0..n).collect();
    let (mut f, mut b) = (Vec::new(), Vec::new());
    let mut stale = 0;
    let mut epochs = 0;
    for _ in 0..settings.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        for batch in order.chunks(settings.batch_size.max(1)) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let w = 1.0 / batch.len() as f64;
            for &i in batch {
                score.standardize(train.pair(i), &mut f, &mut b);
                let s = score.net.forward(&f, &mut cache_f) - score.net.forward(&b, &mut cache_b);
                // Minimizing the negative objective; d(objective)/ds = 1 + e^{-s}.
                let g = -(1.0 + (-s.max(-30.0)).exp()) * w;
                score.net.backward(&mut cache_f, g, &mut grads);
                score.net.backward(&mut cache_b, -g, &mut grads);
            }
            opt.step(&mut score.net.params, &grads);
        }
        let v = mean_objective(&score, validation);
        if v > best_validation {
            best_validation = v;
            best = score.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= settings.patience {
                break;
            }
        }
    }
    Fit {
        score: best,
        best_validation,
        epochs,
        improved: best_validation > initial,
    }
}

/// Trains the score on the training groups and returns it.
pub fn train_neural_score(dataset: &TransitionDataset, settings: &NeuralSettings) -> Result<NeuralScore> {
    let (tr, va) = dataset.split(settings.validation_period.max(2));
    Ok(train(&tr, &va, settings).score)
}

/// Variational irreversibility rate: the held-out value of
/// `E[s] − E[exp(−s)] + 1` per unit time, for the best network found.
pub fn phi_neural(dataset: &TransitionDataset, settings: &NeuralSettings) -> Result<PhiEstimate> {
    if dataset.len() < MIN_PAIRS {
        return Err(Error::InsufficientData {
            needed: MIN_PAIRS,
            got: dataset.len(),
        });
    }
    if settings.hidden.is_empty() || settings.hidden.contains(&0) {
        return Err(Error::InvalidConfig("hidden layer sizes must be positive".into()));
    }
    let (tr, va) = dataset.split(settings.validation_period.max(2));
    let fit = train(&tr, &va, settings);
    let blocks: Vec<(f64, usize)> = (0..va.n_groups())
        .map(|g| {
            let r = va.group_range(g);
            let sum: f64 = r.clone().map(|i| objective(fit.score.score(va.pair(i)))).sum();
            (sum, r.len())
        })
        .filter(|b| b.1 > 0)
        .collect();
    let summary = block_bootstrap(&blocks, settings.n_bootstrap, settings.seed);
    let lag = dataset.lag;
    let mut estimate = PhiEstimate::new(Estimator::Neural, summary.mean / lag, summary.std_error / lag, dataset.len())
        .with_meta("settings", settings)
        .with_meta("lag", lag)
        .with_meta("epochs", fit.epochs)
        .with_meta("validation_objective", fit.best_validation)
        .with_meta("validation_pairs", va.len());
    if !fit.improved {
        estimate.flags.push("no_improvement".into());
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_is_antisymmetric() {
        let groups: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (0..10)
            .map(|g| {
                (0..50)
                    .map(|i| {
                        let k = (g * 50 + i) as f64;
                        let (a, b) = ((k * 0.618).fract(), (k * 0.414).fract());
                        (vec![a, b], vec![a + 0.1, b - 0.05 * a])
                    })
                    .collect()
            })
            .collect();
        let ds = TransitionDataset::from_groups(2, 1.0, &groups).unwrap();
        let settings = NeuralSettings {
            hidden: vec![8],
            learning_rate: 0.02,
            max_epochs: 30,
            ..Default::default()
        };
        let score = train_neural_score(&ds, &settings).unwrap();
        let fwd = score.mean_score(&ds);
        let rev = score.mean_score(&ds.reversed());
        assert!(fwd != 0.0);
        assert!((fwd + rev).abs() < 1e-12);
    }
}
