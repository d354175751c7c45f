//! Histogram gradient-boosted regression trees with logistic loss.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingSettings {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_bins: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum hessian mass in a child.
    pub min_child_weight: f64,
}

impl Default for BoostingSettings {
    fn default() -> Self {
        BoostingSettings {
            n_rounds: 200,
            max_depth: 2,
            learning_rate: 0.1,
            n_bins: 64,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

/// Per-feature bin upper edges from sample quantiles. A value `v` falls in
/// the first bin `b` with `v <= edges[b]`, or in the last bin otherwise.
#[derive(Debug, Clone, PartialEq)]
struct Binner {
    edges: Vec<Vec<f64>>,
}

impl Binner {
    fn fit(x: &[f64], dim: usize, n_bins: usize) -> Self {
        let n = x.len() / dim;
        let edges = (0..dim)
            .map(|f| {
                let mut col: Vec<f64> = (0..n).map(|i| x[i * dim + f]).collect();
                col.sort_by(f64::total_cmp);
                let mut e: Vec<f64> = (1..n_bins).map(|k| col[(k * n / n_bins).min(n - 1)]).collect();
                e.dedup();
                e
            })
            .collect();
        Binner { edges }
    }

    fn bin(&self, f: usize, v: f64) -> u8 {
        self.edges[f].partition_point(|&e| e < v) as u8
    }

    fn n_bins(&self, f: usize) -> usize {
        self.edges[f].len() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    k = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// Binary classifier producing log-odds.
#[derive(Debug, Clone, PartialEq)]
pub struct Gbdt {
    dim: usize,
    base: f64,
    trees: Vec<Tree>,
}

struct Grower<'a> {
    bins: &'a [u8],
    dim: usize,
    binner: &'a Binner,
    grad: &'a [f64],
    hess: &'a [f64],
    settings: &'a BoostingSettings,
}

impl Grower<'_> {
    fn leaf_value(&self, idx: &[usize]) -> f64 {
        let (g, h) = idx.iter().fold((0.0, 0.0), |(g, h), &i| (g + self.grad[i], h + self.hess[i]));
        -g / (h + self.settings.lambda)
    }

    /// Best (gain, feature, bin) split of `idx`, if any has positive gain.
    fn best_split(&self, idx: &[usize]) -> Option<(f64, usize, usize)> {
        let lambda = self.settings.lambda;
        let mut best: Option<(f64, usize, usize)> = None;
        let mut hist_g = Vec::new();
        let mut hist_h = Vec::new();
        for f in 0..self.dim {
            let nb = self.binner.n_bins(f);
            hist_g.clear();
            hist_g.resize(nb, 0.0);
            hist_h.clear();
            hist_h.resize(nb, 0.0);
            for &i in idx {
                let b = self.bins[i * self.dim + f] as usize;
                hist_g[b] += self.grad[i];
                hist_h[b] += self.hess[i];
            }
            let g_tot: f64 = hist_g.iter().sum();
            let h_tot: f64 = hist_h.iter().sum();
            let parent = g_tot * g_tot / (h_tot + lambda);
            let (mut gl, mut hl) = (0.0, 0.0);
            for b in 0..nb - 1 {
                gl += hist_g[b];
                hl += hist_h[b];
                let (gr, hr) = (g_tot - gl, h_tot - hl);
                if hl < self.settings.min_child_weight || hr < self.settings.min_child_weight {
                    continue;
                }
                let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if gain > 1e-12 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, b));
                }
            }
        }
        best
    }

    fn grow(&self, idx: Vec<usize>, depth: usize, nodes: &mut Vec<Node>) -> usize {
        let at = nodes.len();
        nodes.push(Node::Leaf(0.0));
        let split = if depth < self.settings.max_depth { self.best_split(&idx) } else { None };
        match split {
            None => nodes[at] = Node::Leaf(self.leaf_value(&idx)),
            Some((_, feature, bin)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.into_iter().partition(|&i| (self.bins[i * self.dim + feature] as usize) <= bin);
                let left = self.grow(l, depth + 1, nodes);
                let right = self.grow(r, depth + 1, nodes);
                nodes[at] = Node::Split {
                    feature,
                    threshold: self.binner.edges[feature][bin],
                    left,
                    right,
                };
            }
        }
        at
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Gbdt {
    /// Fits on row-major features `x` (`n × dim`) with labels in {0, 1}.
    pub fn fit(x: &[f64], dim: usize, labels: &[f64], settings: &BoostingSettings) -> Self {
        let n = labels.len();
        assert_eq!(x.len(), n * dim);
        let n_bins = settings.n_bins.clamp(2, 256);
        let binner = Binner::fit(x, dim, n_bins);
        let bins: Vec<u8> = x.iter().enumerate().map(|(k, &v)| binner.bin(k % dim, v)).collect();
        let pos = labels.iter().sum::<f64>().clamp(0.5, n as f64 - 0.5);
        let base = (pos / (n as f64 - pos)).ln();
        let mut margin = vec![base; n];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut trees = Vec::with_capacity(settings.n_rounds);
        for _ in 0..settings.n_rounds {
            for i in 0..n {
                let p = sigmoid(margin[i]);
                grad[i] = p - labels[i];
                hess[i] = (p * (1.0 - p)).max(1e-12);
            }
            let grower = Grower {
                bins: &bins,
                dim,
                binner: &binner,
                grad: &grad,
                hess: &hess,
                settings,
            };
            let mut nodes = Vec::new();
            grower.grow((0..n).collect(), 0, &mut nodes);
            for node in nodes.iter_mut() {
                if let Node::Leaf(v) = node {
                    *v *= settings.learning_rate;
                }
            }
            let tree = Tree { nodes };
            for i in 0..n {
                margin[i] += tree.predict(&x[i * dim..(i + 1) * dim]);
            }
            trees.push(tree);
        }
        Gbdt { dim, base, trees }
    }

    /// Log-odds of class 1.
    pub fn decision(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.base + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::aux_rng;
    use rand::Rng;

    #[test]
    fn learns_a_threshold_and_an_interaction() {
        let mut rng = aux_rng(4, 4);
        let n = 4000;
        let mut x = Vec::with_capacity(2 * n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            x.extend([a, b]);
            y.push(if a * b > 0.0 { 1.0 } else { 0.0 });
        }
        let model = Gbdt::fit(&x, 2, &y, &BoostingSettings::default());
        let correct = (0..n)
            .filter(|&i| (model.probability(&x[2 * i..2 * i + 2]) > 0.5) == (y[i] > 0.5))
            .count();
        assert!(correct as f64 / n as f64 > 0.95);
    }

    #[test]
    fn constant_labels_give_constant_output() {
        let x: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let y = vec![1.0; 200];
        let model = Gbdt::fit(&x, 1, &y, &BoostingSettings { n_rounds: 5, ..Default::default() });
        assert_eq!(model.decision(&[3.0]), model.decision(&[150.0]));
    }
}
