use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::Trajectory;
use crate::coarse::GridSpec;
use crate::error::{Error, Result};
use crate::rng::aux_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSettings {
    pub grid: GridSpec,
    /// Laplace pseudo-count added to every reference cell.
    pub pseudo_count: f64,
    /// Subtract the first-order plug-in bias `(occupied cells − 1) / 2n`.
    pub bias_correction: bool,
    pub n_bootstrap: usize,
    pub seed: u64,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        LyapunovSettings {
            grid: GridSpec::square(-0.1, 0.7, 10),
            pseudo_count: 1.0,
            bias_correction: true,
            n_bootstrap: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovPoint {
    pub time: f64,
    pub kl: f64,
    pub std_error: f64,
    pub n_members: usize,
}

/// Laplace-smoothed cell probabilities of the pooled points.
pub fn stationary_reference(paths: &[Vec<[f64; 2]>], grid: &GridSpec, pseudo_count: f64) -> Result<Vec<f64>> {
    grid.validate()?;
    let mut counts = vec![pseudo_count; grid.n_cells()];
    for p in paths.iter().flatten() {
        counts[grid.cell(*p).0] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(counts.into_iter().map(|c| c / total).collect())
}

fn kl_from_cells(cells: &[usize], reference: &[f64], bias_correction: bool) -> f64 {
    let mut counts = vec![0usize; reference.len()];
    for &c in cells {
        counts[c] += 1;
    }
    let n = cells.len() as f64;
    let mut kl = 0.0;
    let mut occupied = 0;
    for (&k, &q) in counts.iter().zip(reference) {
        if k > 0 {
            occupied += 1;
            let p = k as f64 / n;
            kl += p * (p / q).ln();
        }
    }
    if bias_correction {
        kl -= (occupied as f64 - 1.0) / (2.0 * n);
    }
    kl
}

/// Relative entropy of the ensemble's cell distribution at each checkpoint
/// with respect to `reference`, with a bootstrap over ensemble members.
/// Checkpoint times are measured from the start of the records.
pub fn lyapunov_series(
    ensemble: &[Trajectory],
    reference: &[f64],
    checkpoints: &[f64],
    settings: &LyapunovSettings,
) -> Result<Vec<LyapunovPoint>> {
    let grid = &settings.grid;
    grid.validate()?;
    if reference.len() != grid.n_cells() {
        return Err(Error::InvalidConfig("reference does not match the grid".into()));
    }
    if ensemble.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut rng = aux_rng(settings.seed, 0x1ab0);
    let members = ensemble.len();
    let resamples: Vec<Vec<usize>> = (0..settings.n_bootstrap)
        .map(|_| (0..members).map(|_| rng.random_range(0..members)).collect())
        .collect();
    checkpoints
        .iter()
        .map(|&t| {
            let cells: Vec<usize> = ensemble
                .iter()
                .map(|traj| {
                    let k = (t / traj.record_interval()).round() as usize;
                    traj.records
                        .get(k)
                        .map(|r| grid.cell(r.state.as_array()).0)
                        .ok_or_else(|| Error::InvalidConfig(format!("checkpoint {t} beyond the recorded time")))
                })
                .collect::<Result<_>>()?;
            let kl = kl_from_cells(&cells, reference, settings.bias_correction);
            let reps: Vec<f64> = resamples
                .iter()
                .map(|idx| {
                    let c: Vec<usize> = idx.iter().map(|&i| cells[i]).collect();
                    kl_from_cells(&c, reference, settings.bias_correction)
                })
                .collect();
            let m = reps.iter().sum::<f64>() / reps.len().max(1) as f64;
            let var = reps.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (reps.len().max(2) - 1) as f64;
            Ok(LyapunovPoint {
                time: t,
                kl,
                std_error: var.sqrt(),
                n_members: members,
            })
        })
        .collect()
}
