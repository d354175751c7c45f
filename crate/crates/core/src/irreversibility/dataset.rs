use crate::bandit::Trajectory;
use crate::error::{Error, Result};

/// Ordered transition pairs `(x_t, x_{t+lag})` pooled from stationary paths.
///
/// Pairs are grouped by source path so that held-out splits and error bars
/// never mix correlated pairs across groups. Reversed pairs are built on
/// demand and never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    pub dim: usize,
    /// Time between the two ends of a pair.
    pub lag: f64,
    /// `n_pairs × 2·dim`, row-major: start point then end point.
    data: Vec<f64>,
    /// Pair offsets of each group, length `n_groups + 1`.
    offsets: Vec<usize>,
}

impl TransitionDataset {
    /// Builds pairs from each path: the pair starting at sample `k` ends at
    /// `k + lag_samples`, and consecutive pairs start `spacing` samples apart.
    pub fn from_paths<const D: usize>(
        paths: &[Vec<[f64; D]>],
        sample_interval: f64,
        lag_samples: usize,
        spacing: usize,
    ) -> Result<Self> {
        if lag_samples == 0 || spacing == 0 {
            return Err(Error::InvalidConfig("lag and spacing must be >= 1".into()));
        }
        let mut data = Vec::new();
        let mut offsets = vec![0];
        let mut n = 0;
        for path in paths {
            let mut k = 0;
            while k + lag_samples < path.len() {
                data.extend_from_slice(&path[k]);
                data.extend_from_slice(&path[k + lag_samples]);
                n += 1;
                k += spacing;
            }
            offsets.push(n);
        }
        Ok(TransitionDataset {
            dim: D,
            lag: sample_interval * lag_samples as f64,
            data,
            offsets,
        })
    }

    pub fn from_trajectories(trajectories: &[Trajectory], lag_samples: usize, spacing: usize) -> Result<Self> {
        let interval = trajectories
            .first()
            .map(|t| t.record_interval())
            .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
        let paths: Vec<Vec<[f64; 2]>> = trajectories.iter().map(|t| t.stationary_path()).collect();
        Self::from_paths(&paths, interval, lag_samples, spacing)
    }

    /// Dataset from explicit groups of pairs.
    pub fn from_groups(dim: usize, lag: f64, groups: &[Vec<(Vec<f64>, Vec<f64>)>]) -> Result<Self> {
        let mut data = Vec::new();
        let mut offsets = vec![0];
        let mut n = 0;
        for g in groups {
            for (x, y) in g {
                if x.len() != dim || y.len() != dim {
                    return Err(Error::InvalidConfig("pair dimension mismatch".into()));
                }
                data.extend_from_slice(x);
                data.extend_from_slice(y);
                n += 1;
            }
            offsets.push(n);
        }
        Ok(TransitionDataset {
            dim,
            lag,
            data,
            offsets,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / (2 * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.offsets.len() - 1
    }

    /// The concatenated `(start, end)` of pair `i`.
    pub fn pair(&self, i: usize) -> &[f64] {
        let w = 2 * self.dim;
        &self.data[i * w..(i + 1) * w]
    }

    pub fn group_range(&self, g: usize) -> std::ops::Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    /// Group index of each pair.
    pub fn group_of(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        for g in 0..self.n_groups() {
            out.extend(std::iter::repeat_n(g, self.offsets[g + 1] - self.offsets[g]));
        }
        out
    }

    /// Every pair with its two ends exchanged.
    pub fn reversed(&self) -> Self {
        let d = self.dim;
        let mut data = self.data.clone();
        for row in data.chunks_mut(2 * d) {
            let (a, b) = row.split_at_mut(d);
            a.swap_with_slice(b);
        }
        TransitionDataset {
            data,
            ..self.clone()
        }
    }

    /// Groups whose index satisfies `keep`, in order.
    pub fn select_groups(&self, keep: impl Fn(usize) -> bool) -> Self {
        let w = 2 * self.dim;
        let mut data = Vec::new();
        let mut offsets = vec![0];
        let mut n = 0;
        for g in 0..self.n_groups() {
            if keep(g) {
                let r = self.group_range(g);
                data.extend_from_slice(&self.data[r.start * w..r.end * w]);
                n += r.len();
                offsets.push(n);
            }
        }
        TransitionDataset {
            dim: self.dim,
            lag: self.lag,
            data,
            offsets,
        }
    }

    /// Splits groups into (train, held-out) with every `period`-th group
    /// held out. With fewer groups than `period`, pairs are regrouped into
    /// contiguous chunks first.
    pub fn split(&self, period: usize) -> (Self, Self) {
        let base = if self.n_groups() >= period {
            self.clone()
        } else {
            self.rechunk(period * 4)
        };
        (
            base.select_groups(|g| g % period != period - 1),
            base.select_groups(|g| g % period == period - 1),
        )
    }

    /// Regroups pairs into `n` contiguous groups of near-equal size.
    pub fn rechunk(&self, n: usize) -> Self {
        let len = self.len();
        let n = n.clamp(1, len.max(1));
        let offsets = (0..=n).map(|k| k * len / n).collect();
        TransitionDataset {
            offsets,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_lag_and_groups() {
        let paths = vec![
            (0..10).map(|i| [i as f64, 0.0]).collect::<Vec<_>>(),
            (0..5).map(|i| [10.0 + i as f64, 1.0]).collect::<Vec<_>>(),
        ];
        let ds = TransitionDataset::from_paths(&paths, 0.5, 2, 3).unwrap();
        // path 0: starts 0,3,6 ; path 1: starts 0
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.n_groups(), 2);
        assert_eq!(ds.lag, 1.0);
        assert_eq!(ds.pair(1), &[3.0, 0.0, 5.0, 0.0]);
        assert_eq!(ds.pair(3), &[10.0, 1.0, 12.0, 1.0]);
        let rev = ds.reversed();
        assert_eq!(rev.pair(1), &[5.0, 0.0, 3.0, 0.0]);
        assert_eq!(ds.group_of(), vec![0, 0, 0, 1]);
    }

    #[test]
    fn split_is_a_partition() {
        let paths: Vec<Vec<[f64; 1]>> = (0..10).map(|g| (0..20).map(|i| [(g * 100 + i) as f64]).collect()).collect();
        let ds = TransitionDataset::from_paths(&paths, 1.0, 1, 1).unwrap();
        let (train, test) = ds.split(5);
        assert_eq!(train.len() + test.len(), ds.len());
        assert_eq!(test.n_groups(), 2);
    }
}
