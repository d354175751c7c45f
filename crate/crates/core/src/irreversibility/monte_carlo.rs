use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Estimator, PhiEstimate};
use crate::bandit::{AgentParams, BanditConfig, Trajectory};
use crate::error::{Error, Result};
use crate::fokker_planck::{BanditModel, DriftDiffusionModel};
use crate::stats::block_bootstrap;

/// Fewer visited states than this is an error.
pub const MIN_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSettings {
    /// Bootstrap block length in units of time.
    pub block_time: f64,
    pub n_bootstrap: usize,
    pub seed: u64,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        MonteCarloSettings {
            block_time: 100.0,
            n_bootstrap: 200,
            seed: 0,
        }
    }
}

/// Stationary average of `(F − ∇·D)ᵀ D⁻¹ (F − ∇·D) + ∇·(F − ∇·D)` over the
/// visited states, with the closed-form fields of the bandit model.
pub fn phi_monte_carlo(trajectories: &[Trajectory], config: &BanditConfig, params: &AgentParams) -> Result<PhiEstimate> {
    let paths: Vec<Vec<[f64; 2]>> = trajectories.iter().map(|t| t.stationary_path()).collect();
    let interval = trajectories.first().map(|t| t.record_interval()).unwrap_or(1.0);
    let model = BanditModel::new(*config, *params);
    Ok(phi_monte_carlo_model(&paths, interval, &model, &MonteCarloSettings::default())?
        .with_meta("beta", params.beta)
        .with_meta("gamma", params.gamma)
        .with_meta("sigma_eta", params.sigma_eta))
}

/// Monte Carlo estimator for an arbitrary drift–diffusion model, with the
/// standard error from a block bootstrap within each path.
pub fn phi_monte_carlo_model<M: DriftDiffusionModel>(
    paths: &[Vec<[f64; 2]>],
    sample_interval: f64,
    model: &M,
    settings: &MonteCarloSettings,
) -> Result<PhiEstimate> {
    let n: usize = paths.iter().map(Vec::len).sum();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    let block = ((settings.block_time / sample_interval).ceil() as usize).max(1);
    let per_path: Vec<Vec<(f64, usize)>> = paths
        .par_iter()
        .map(|path| {
            let mut blocks = Vec::with_capacity(path.len() / block + 1);
            for chunk in path.chunks(block) {
                let mut sum = 0.0;
                for &x in chunk {
                    sum += model.fields(x).flux_density(x)?;
                }
                blocks.push((sum, chunk.len()));
            }
            Ok(blocks)
        })
        .collect::<Result<_>>()?;
    let blocks: Vec<(f64, usize)> = per_path.into_iter().flatten().collect();
    let summary = block_bootstrap(&blocks, settings.n_bootstrap, settings.seed);
    Ok(PhiEstimate::new(Estimator::MonteCarlo, summary.mean, summary.std_error, n)
        .with_meta("block_samples", block)
        .with_meta("n_bootstrap", settings.n_bootstrap)
        .with_meta("sample_interval", sample_interval))
}
