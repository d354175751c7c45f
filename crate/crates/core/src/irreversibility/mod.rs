//! Irreversibility rate of belief dynamics.
//!
//! Three estimators of the stationary irreversibility rate Φ (units of kT
//! per unit time): the model-based Monte Carlo average of the entropy-flux
//! density, and two model-free estimators trained on forward vs
//! time-reversed transition pairs. A coarse-grained Schnakenberg rate and a
//! relative-entropy Lyapunov series serve as diagnostics.

mod classifier;
mod dataset;
mod lyapunov;
mod monte_carlo;
mod neural;

pub mod boosting;
pub mod mlp;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use classifier::{phi_classifier, ClassifierSettings};
pub use dataset::TransitionDataset;
pub use lyapunov::{lyapunov_series, stationary_reference, LyapunovPoint, LyapunovSettings};
pub use monte_carlo::{phi_monte_carlo, phi_monte_carlo_model, MonteCarloSettings};
pub use neural::{phi_neural, train_neural_score, NeuralScore, NeuralSettings};

use crate::coarse::{CellPaths, CoarseGrainModel};
use crate::error::Result;
use crate::stats::mean_se;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    MonteCarlo,
    Neural,
    Classifier,
    Schnakenberg,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::MonteCarlo => "monte_carlo",
            Estimator::Neural => "neural",
            Estimator::Classifier => "classifier",
            Estimator::Schnakenberg => "schnakenberg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate {
    pub value: f64,
    pub std_error: f64,
    pub estimator: Estimator,
    pub n_samples: usize,
    /// Estimator settings and diagnostics.
    pub metadata: BTreeMap<String, serde_json::Value>,
    /// Non-empty when the estimate is unreliable (non-convergence, degenerate
    /// classifier, ...).
    pub flags: Vec<String>,
}

impl PhiEstimate {
    pub fn new(estimator: Estimator, value: f64, std_error: f64, n_samples: usize) -> Self {
        PhiEstimate {
            value,
            std_error,
            estimator,
            n_samples,
            metadata: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Coarse-grained entropy production per unit time from a fitted model.
/// The standard error is not estimated here (see
/// [`entropy_production_pi_bootstrap`]).
pub fn entropy_production_pi(model: &CoarseGrainModel) -> PhiEstimate {
    let n = model.visits.as_ref().map(|v| v.iter().sum::<u64>() as usize).unwrap_or(0);
    PhiEstimate::new(Estimator::Schnakenberg, model.schnakenberg_entropy_rate() / model.lag, 0.0, n)
        .with_meta("grid", model.grid)
        .with_meta("lag", model.lag)
}

/// [`entropy_production_pi`] with a standard error from resampling whole
/// paths with replacement.
pub fn entropy_production_pi_bootstrap(paths: &CellPaths, n_boot: usize, seed: u64) -> Result<PhiEstimate> {
    use rand::Rng;
    let model = paths.fit()?;
    let mut estimate = entropy_production_pi(&model);
    let mut rng = crate::rng::aux_rng(seed, 0x5c4a);
    let mut reps = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let resampled = CellPaths {
            grid: paths.grid,
            lag: paths.lag,
            paths: (0..paths.paths.len())
                .map(|_| paths.paths[rng.random_range(0..paths.paths.len())].clone())
                .collect(),
            out_of_bounds: paths.out_of_bounds,
        };
        reps.push(resampled.fit()?.schnakenberg_entropy_rate() / paths.lag);
    }
    let spread = mean_se(&reps);
    // Standard deviation of the bootstrap replicates.
    estimate.std_error = spread.std_error * (reps.len() as f64).sqrt();
    Ok(estimate.with_meta("n_bootstrap", n_boot))
}

/// CSV `gamma,estimator,phi,std_error,n_samples`.
pub fn write_estimates_csv<W: Write>(rows: &[(f64, PhiEstimate)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["gamma", "estimator", "phi", "std_error", "n_samples"])?;
    for (gamma, e) in rows {
        w.write_record([
            gamma.to_string(),
            e.estimator.as_str().to_string(),
            e.value.to_string(),
            e.std_error.to_string(),
            e.n_samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
