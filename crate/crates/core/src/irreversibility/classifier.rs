use serde::{Deserialize, Serialize};

use super::boosting::{BoostingSettings, Gbdt};
use super::{Estimator, PhiEstimate, TransitionDataset};
use crate::error::{Error, Result};
use crate::stats::{auc, block_bootstrap};

pub const MIN_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSettings {
    pub boosting: BoostingSettings,
    /// Every `holdout_period`-th group is held out (5 → 20%); held-out
    /// groups alternate between calibration and evaluation.
    pub holdout_period: usize,
    pub n_bootstrap: usize,
    pub seed: u64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        ClassifierSettings {
            boosting: BoostingSettings::default(),
            holdout_period: 5,
            n_bootstrap: 200,
            seed: 0,
        }
    }
}

/// Midpoint and displacement of a pair, optionally with the displacement
/// negated (the time-reversed pair).
fn features(pair: &[f64], dim: usize, reversed: bool, out: &mut Vec<f64>) {
    let (a, b) = pair.split_at(dim);
    for k in 0..dim {
        out.push(0.5 * (a[k] + b[k]));
    }
    for k in 0..dim {
        let d = b[k] - a[k];
        out.push(if reversed { -d } else { d });
    }
}

/// Log-odds of "forward" made exactly odd under time reversal.
fn odd_logit(model: &Gbdt, pair: &[f64], dim: usize, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    features(pair, dim, false, buf);
    features(pair, dim, true, buf);
    let (f, r) = buf.split_at(2 * dim);
    0.5 * (model.decision(f) - model.decision(r))
}

/// Maximum-likelihood temperature `c >= 0` for logits `c·z` of forward
/// pairs against their reversals.
fn calibrate(z: &[f64]) -> f64 {
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let slope = |c: f64| z.iter().map(|&f| f * sig(-c * f)).sum::<f64>();
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    // The likelihood is concave in c; bracket the root of its slope.
    let (mut lo, mut hi) = (0.0, 1.0);
    while slope(hi) > 0.0 && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fits the forward-vs-reversed classifier on the training groups of the
/// dataset.
pub fn train_classifier(train: &TransitionDataset, settings: &BoostingSettings) -> Gbdt {
    let dim = train.dim;
    let mut x = Vec::with_capacity(train.len() * 4 * dim);
    let mut y = Vec::with_capacity(train.len() * 2);
    for i in 0..train.len() {
        features(train.pair(i), dim, false, &mut x);
        y.push(1.0);
        features(train.pair(i), dim, true, &mut x);
        y.push(0.0);
    }
    Gbdt::fit(&x, 2 * dim, &y, settings)
}

/// Classification irreversibility rate: mean calibrated log-odds of
/// held-out forward pairs per unit time.
pub fn phi_classifier(dataset: &TransitionDataset, settings: &ClassifierSettings) -> Result<PhiEstimate> {
    if dataset.len() < MIN_PAIRS {
        return Err(Error::InsufficientData {
            needed: MIN_PAIRS,
            got: dataset.len(),
        });
    }
    let dim = dataset.dim;
    let (train, held) = dataset.split(settings.holdout_period.max(2));
    let (calibration, evaluation) = held.split(2);
    let model = train_classifier(&train, &settings.boosting);

    let mut buf = Vec::new();
    let z_cal: Vec<f64> = (0..calibration.len())
        .map(|i| odd_logit(&model, calibration.pair(i), dim, &mut buf))
        .collect();
    let c = calibrate(&z_cal);

    let z_eval: Vec<f64> = (0..evaluation.len())
        .map(|i| odd_logit(&model, evaluation.pair(i), dim, &mut buf))
        .collect();
    let blocks: Vec<(f64, usize)> = (0..evaluation.n_groups())
        .map(|g| {
            let r = evaluation.group_range(g);
            (c * z_eval[r.clone()].iter().sum::<f64>(), r.len())
        })
        .filter(|b| b.1 > 0)
        .collect();
    let summary = block_bootstrap(&blocks, settings.n_bootstrap, settings.seed);
    let negatives: Vec<f64> = z_eval.iter().map(|z| -z).collect();
    let held_out_auc = auc(&z_eval, &negatives);
    let lag = dataset.lag;

    let mut estimate =
        PhiEstimate::new(Estimator::Classifier, summary.mean / lag, summary.std_error / lag, dataset.len())
            .with_meta("settings", settings)
            .with_meta("lag", lag)
            .with_meta("temperature", c)
            .with_meta("auc", held_out_auc)
            .with_meta("evaluation_pairs", evaluation.len());
    let (min, max) = z_eval
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &z| (a.min(z), b.max(z)));
    if !(max - min > 1e-12) {
        estimate.flags.push("degenerate_classifier".into());
    }
    if blocks.len() < 2 {
        // One block gives no spread to resample.
        estimate.flags.push("single_evaluation_group".into());
    }
    Ok(estimate)
}
