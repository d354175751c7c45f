//! Coarse-grained Markov description of sampled belief paths: occupation,
//! transition matrix, probability currents between cells and the
//! Schnakenberg entropy-production rate.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::Trajectory;
use crate::error::{Error, Result};
use crate::rng::aux_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Cells per axis.
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::square(-0.1, 0.7, 20)
    }
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, n: usize) -> Result<Self> {
        let grid = GridSpec {
            x_min,
            x_max,
            y_min,
            y_max,
            n,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec {
            x_min: lo,
            x_max: hi,
            y_min: lo,
            y_max: hi,
            n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) || self.n < 2 {
            return Err(Error::InvalidConfig(format!("bad grid {self:?}")));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n * self.n
    }

    fn axis_index(v: f64, lo: f64, hi: f64, n: usize) -> (usize, bool) {
        let u = (v - lo) / (hi - lo) * n as f64;
        if u < 0.0 || v.is_nan() {
            (0, true)
        } else if u >= n as f64 {
            (n - 1, v > hi)
        } else {
            (u as usize, false)
        }
    }

    /// Cell index `iy * n + ix`; out-of-bounds points are clamped to the edge
    /// cell and flagged.
    pub fn cell(&self, p: [f64; 2]) -> (usize, bool) {
        let (ix, ox) = Self::axis_index(p[0], self.x_min, self.x_max, self.n);
        let (iy, oy) = Self::axis_index(p[1], self.y_min, self.y_max, self.n);
        (iy * self.n + ix, ox || oy)
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.n, cell / self.n)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn center(&self, cell: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(cell);
        let wx = (self.x_max - self.x_min) / self.n as f64;
        let wy = (self.y_max - self.y_min) / self.n as f64;
        [self.x_min + (ix as f64 + 0.5) * wx, self.y_min + (iy as f64 + 0.5) * wy]
    }
}

/// Cell sequences of sampled paths, the input to every fit.
#[derive(Debug, Clone)]
pub struct CellPaths {
    pub grid: GridSpec,
    /// Time between consecutive samples.
    pub lag: f64,
    pub paths: Vec<Vec<u32>>,
    pub out_of_bounds: u64,
}

impl CellPaths {
    pub fn from_points(paths: &[Vec<[f64; 2]>], grid: GridSpec, lag: f64) -> Result<Self> {
        grid.validate()?;
        let mut out_of_bounds = 0;
        let cells = paths
            .iter()
            .map(|path| {
                path.iter()
                    .map(|&p| {
                        let (c, oob) = grid.cell(p);
                        out_of_bounds += oob as u64;
                        c as u32
                    })
                    .collect()
            })
            .collect();
        Ok(CellPaths {
            grid,
            lag,
            paths: cells,
            out_of_bounds,
        })
    }

    /// Post-burn-in records of trajectories sharing one sampling interval.
    pub fn from_trajectories(trajectories: &[Trajectory], grid: GridSpec) -> Result<Self> {
        let lag = trajectories
            .first()
            .map(|t| t.record_interval())
            .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
        if trajectories.iter().any(|t| t.record_interval() != lag) {
            return Err(Error::InvalidConfig("trajectories use different sampling intervals".into()));
        }
        let points: Vec<Vec<[f64; 2]>> = trajectories.iter().map(|t| t.stationary_path()).collect();
        Self::from_points(&points, grid, lag)
    }

    pub fn n_samples(&self) -> usize {
        self.paths.iter().map(Vec::len).sum()
    }

    pub fn fit(&self) -> Result<CoarseGrainModel> {
        let nc = self.grid.n_cells();
        let mut visits = vec![0u64; nc];
        let mut counts = vec![0u64; nc * nc];
        for path in &self.paths {
            for &c in path {
                visits[c as usize] += 1;
            }
            for w in path.windows(2) {
                counts[w[0] as usize * nc + w[1] as usize] += 1;
            }
        }
        CoarseGrainModel::from_counts(self.grid, self.lag, visits, counts, self.out_of_bounds)
    }

    /// Surrogates that reverse randomly chosen blocks of `block_len`
    /// transitions. Occupation is preserved while every block's net flux is
    /// multiplied by a random sign, which gives the null distribution of
    /// currents under time-reversal symmetry. `stat` is evaluated on each
    /// surrogate fit.
    pub fn block_reversal_surrogates<T>(
        &self,
        n_surrogates: usize,
        block_len: usize,
        seed: u64,
        stat: impl Fn(&CoarseGrainModel) -> T,
    ) -> Result<Vec<T>> {
        let nc = self.grid.n_cells();
        let block_len = block_len.max(1);
        let mut visits = vec![0u64; nc];
        for path in &self.paths {
            for &c in path {
                visits[c as usize] += 1;
            }
        }
        let mut rng = aux_rng(seed, 0x5u64 << 32);
        let mut out = Vec::with_capacity(n_surrogates);
        let mut counts = vec![0u64; nc * nc];
        for _ in 0..n_surrogates {
            counts.iter_mut().for_each(|c| *c = 0);
            for path in &self.paths {
                let n_tr = path.len().saturating_sub(1);
                let mut start = 0;
                while start < n_tr {
                    let end = (start + block_len).min(n_tr);
                    let reverse: bool = rng.random();
                    for k in start..end {
                        let (from, to) = if reverse { (path[k + 1], path[k]) } else { (path[k], path[k + 1]) };
                        counts[from as usize * nc + to as usize] += 1;
                    }
                    start = end;
                }
            }
            let model = CoarseGrainModel::from_counts(self.grid, self.lag, visits.clone(), counts.clone(), self.out_of_bounds)?;
            out.push(stat(&model));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrainModel {
    pub grid: GridSpec,
    /// Time between the two ends of a counted transition.
    pub lag: f64,
    /// Probability per cell, sums to one.
    pub occupation: Vec<f64>,
    /// Row-stochastic matrix, `n_cells × n_cells` row-major; rows of unvisited
    /// cells are all zero (see [`CoarseGrainModel::is_empty_row`]).
    pub transitions: Vec<f64>,
    /// Raw visit counts, when fitted from data.
    pub visits: Option<Vec<u64>>,
    /// Raw transition counts, when fitted from data.
    pub counts: Option<Vec<u64>>,
    pub out_of_bounds: u64,
}

impl CoarseGrainModel {
    pub fn from_counts(grid: GridSpec, lag: f64, visits: Vec<u64>, counts: Vec<u64>, out_of_bounds: u64) -> Result<Self> {
        let nc = grid.n_cells();
        let total: u64 = visits.iter().sum();
        let n_transitions: u64 = counts.iter().sum();
        if total == 0 || n_transitions == 0 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: total as usize,
            });
        }
        let occupation = visits.iter().map(|&v| v as f64 / total as f64).collect();
        let mut transitions = vec![0.0; nc * nc];
        for i in 0..nc {
            let row = &counts[i * nc..(i + 1) * nc];
            let r: u64 = row.iter().sum();
            if r > 0 {
                for (t, &c) in transitions[i * nc..(i + 1) * nc].iter_mut().zip(row) {
                    *t = c as f64 / r as f64;
                }
            }
        }
        Ok(CoarseGrainModel {
            grid,
            lag,
            occupation,
            transitions,
            visits: Some(visits),
            counts: Some(counts),
            out_of_bounds,
        })
    }

    /// A model given directly by its stationary law and transition matrix.
    pub fn from_parts(grid: GridSpec, lag: f64, occupation: Vec<f64>, transitions: Vec<f64>) -> Result<Self> {
        let nc = grid.n_cells();
        if occupation.len() != nc || transitions.len() != nc * nc {
            return Err(Error::InvalidConfig("occupation/transition sizes do not match the grid".into()));
        }
        Ok(CoarseGrainModel {
            grid,
            lag,
            occupation,
            transitions,
            visits: None,
            counts: None,
            out_of_bounds: 0,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.transitions[i * self.n_cells() + j]
    }

    pub fn is_empty_row(&self, i: usize) -> bool {
        let nc = self.n_cells();
        self.transitions[i * nc..(i + 1) * nc].iter().all(|&t| t == 0.0)
    }

    /// Fraction of samples that fell outside the grid bounds.
    pub fn out_of_bounds_fraction(&self) -> f64 {
        match &self.visits {
            Some(v) => self.out_of_bounds as f64 / v.iter().sum::<u64>().max(1) as f64,
            None => 0.0,
        }
    }

    fn observed(&self, i: usize, j: usize) -> bool {
        let nc = self.n_cells();
        match &self.counts {
            Some(c) => c[i * nc + j] > 0,
            None => self.transitions[i * nc + j] > 0.0,
        }
    }

    /// Probability current `J[i→j] = P_i T_ij − P_j T_ji` over every pair with
    /// an observed transition in either direction.
    pub fn currents(&self) -> CurrentField {
        let nc = self.n_cells();
        let mut pairs = BTreeMap::new();
        let mut divergence = vec![0.0; nc];
        for i in 0..nc {
            for j in i + 1..nc {
                if !(self.observed(i, j) || self.observed(j, i)) {
                    continue;
                }
                let flux = self.occupation[i] * self.transition(i, j) - self.occupation[j] * self.transition(j, i);
                pairs.insert((i as u32, j as u32), flux);
                divergence[i] += flux;
                divergence[j] -= flux;
            }
        }
        CurrentField {
            grid: self.grid,
            pairs,
            divergence,
        }
    }

    /// Schnakenberg entropy-production rate per sampling interval,
    /// `½ Σ (P_i T_ij − P_j T_ji) ln(P_i T_ij / P_j T_ji)`.
    ///
    /// For fitted models every pair with observed flow gets one extra count
    /// in each direction before normalization, so one-directional pairs stay
    /// finite. Divide by [`CoarseGrainModel::lag`] for a rate per unit time.
    pub fn schnakenberg_entropy_rate(&self) -> f64 {
        let nc = self.n_cells();
        let mut total = 0.0;
        match &self.counts {
            Some(counts) => {
                let mut row_totals: Vec<f64> = (0..nc)
                    .map(|i| counts[i * nc..(i + 1) * nc].iter().sum::<u64>() as f64)
                    .collect();
                let mut smoothed = Vec::new();
                for i in 0..nc {
                    for j in i + 1..nc {
                        let (cij, cji) = (counts[i * nc + j], counts[j * nc + i]);
                        if cij + cji > 0 {
                            row_totals[i] += 1.0;
                            row_totals[j] += 1.0;
                            smoothed.push((i, j, cij as f64 + 1.0, cji as f64 + 1.0));
                        }
                    }
                }
                for (i, j, cij, cji) in smoothed {
                    let fwd = self.occupation[i] * cij / row_totals[i];
                    let bwd = self.occupation[j] * cji / row_totals[j];
                    if fwd > 0.0 && bwd > 0.0 {
                        total += (fwd - bwd) * (fwd / bwd).ln();
                    }
                }
            }
            None => {
                for i in 0..nc {
                    for j in i + 1..nc {
                        let fwd = self.occupation[i] * self.transition(i, j);
                        let bwd = self.occupation[j] * self.transition(j, i);
                        if fwd > 0.0 && bwd > 0.0 {
                            total += (fwd - bwd) * (fwd / bwd).ln();
                        }
                    }
                }
            }
        }
        total
    }

    /// Number of 4-connected components of cells whose occupation is at
    /// least `fraction` of the largest cell occupation.
    pub fn occupation_components(&self, fraction: f64) -> usize {
        let n = self.grid.n;
        let max = self.occupation.iter().copied().fold(0.0, f64::max);
        let above: Vec<bool> = self.occupation.iter().map(|&p| p > 0.0 && p >= fraction * max).collect();
        let mut seen = vec![false; above.len()];
        let mut components = 0;
        for start in 0..above.len() {
            if !above[start] || seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(c) = stack.pop() {
                let (ix, iy) = self.grid.coords(c);
                let mut push = |jx: usize, jy: usize| {
                    let k = self.grid.index(jx, jy);
                    if above[k] && !seen[k] {
                        seen[k] = true;
                        stack.push(k);
                    }
                };
                if ix > 0 {
                    push(ix - 1, iy);
                }
                if ix + 1 < n {
                    push(ix + 1, iy);
                }
                if iy > 0 {
                    push(ix, iy - 1);
                }
                if iy + 1 < n {
                    push(ix, iy + 1);
                }
            }
        }
        components
    }

    /// Chi-square statistic for `visits(ix, iy) = visits(iy, ix)` and its
    /// degrees of freedom; only meaningful on square grids.
    pub fn reflection_chi_square(&self) -> Option<(f64, usize)> {
        let visits = self.visits.as_ref()?;
        let n = self.grid.n;
        let mut stat = 0.0;
        let mut dof = 0;
        for iy in 0..n {
            for ix in iy + 1..n {
                let a = visits[self.grid.index(ix, iy)] as f64;
                let b = visits[self.grid.index(iy, ix)] as f64;
                if a + b > 0.0 {
                    stat += (a - b).powi(2) / (a + b);
                    dof += 1;
                }
            }
        }
        Some((stat, dof))
    }

    /// CSV `cell_x,cell_y,prob` with cell-centre coordinates.
    pub fn write_occupation_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["cell_x", "cell_y", "prob"])?;
        for (c, p) in self.occupation.iter().enumerate() {
            let [x, y] = self.grid.center(c);
            w.write_record([x.to_string(), y.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Antisymmetric pairwise currents between cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    pub grid: GridSpec,
    /// `J[i→j]` stored once per unordered pair with `i < j`.
    pub pairs: BTreeMap<(u32, u32), f64>,
    /// `Σ_j J[i→j]` per cell.
    pub divergence: Vec<f64>,
}

impl CurrentField {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.pairs.get(&(i as u32, j as u32)).copied().unwrap_or(0.0),
            Greater => -self.pairs.get(&(j as u32, i as u32)).copied().unwrap_or(0.0),
            Equal => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.pairs.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_divergence(&self) -> f64 {
        self.divergence.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Counter-clockwise circulation of nearest-neighbour currents around the
    /// plaquette whose lower-left cell is `(ix, iy)`.
    pub fn plaquette(&self, ix: usize, iy: usize) -> f64 {
        let g = &self.grid;
        let c00 = g.index(ix, iy);
        let c10 = g.index(ix + 1, iy);
        let c11 = g.index(ix + 1, iy + 1);
        let c01 = g.index(ix, iy + 1);
        self.get(c00, c10) + self.get(c10, c11) + self.get(c11, c01) + self.get(c01, c00)
    }

    /// Angular momentum of the currents about `centre`,
    /// `Σ J[i→j] (m_ij − centre) × (c_j − c_i)` over pairs whose midpoint
    /// `m_ij` satisfies `region`. Positive means counter-clockwise (x right,
    /// y up).
    pub fn circulation(&self, centre: [f64; 2], region: impl Fn([f64; 2]) -> bool) -> f64 {
        let g = &self.grid;
        let mut total = 0.0;
        for (&(i, j), &flux) in &self.pairs {
            let a = g.center(i as usize);
            let b = g.center(j as usize);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            if !region(mid) {
                continue;
            }
            let r = [mid[0] - centre[0], mid[1] - centre[1]];
            let d = [b[0] - a[0], b[1] - a[1]];
            total += flux * (r[0] * d[1] - r[1] * d[0]);
        }
        total
    }

    /// Circulation below (`x > y`) and above (`x < y`) the diagonal, each
    /// about the occupation centroid of its own half.
    pub fn lobe_circulations(&self, occupation: &[f64]) -> (f64, f64) {
        let g = &self.grid;
        let centroid = |below: bool| {
            let (mut w, mut cx, mut cy) = (0.0, 0.0, 0.0);
            for (c, &p) in occupation.iter().enumerate() {
                let [x, y] = g.center(c);
                if (x > y) == below && x != y {
                    w += p;
                    cx += p * x;
                    cy += p * y;
                }
            }
            if w > 0.0 { [cx / w, cy / w] } else { [0.0, 0.0] }
        };
        (
            self.circulation(centroid(true), |p| p[0] > p[1]),
            self.circulation(centroid(false), |p| p[0] < p[1]),
        )
    }

    /// CSV `from_x,from_y,to_x,to_y,J,noise_floor` with cell-centre
    /// coordinates; `noise_floor` is left empty when unknown.
    pub fn write_csv<W: Write>(&self, writer: W, noise_floor: Option<f64>) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["from_x", "from_y", "to_x", "to_y", "J", "noise_floor"])?;
        let floor = noise_floor.map(|f| f.to_string()).unwrap_or_default();
        for (&(i, j), &flux) in &self.pairs {
            let [fx, fy] = self.grid.center(i as usize);
            let [tx, ty] = self.grid.center(j as usize);
            w.write_record([
                fx.to_string(),
                fy.to_string(),
                tx.to_string(),
                ty.to_string(),
                flux.to_string(),
                floor.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits the coarse-grained model to the post-burn-in part of `trajectories`.
pub fn fit(trajectories: &[Trajectory], grid: GridSpec) -> Result<CoarseGrainModel> {
    CellPaths::from_trajectories(trajectories, grid)?.fit()
}

pub fn currents(model: &CoarseGrainModel) -> CurrentField {
    model.currents()
}

pub fn schnakenberg_entropy_rate(model: &CoarseGrainModel) -> f64 {
    model.schnakenberg_entropy_rate()
}

/// Upper `q`-quantile (nearest rank) of a sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}
