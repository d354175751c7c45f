//! Minimal fully connected network with tanh hidden units, a scalar linear
//! output and an Adam optimizer. Parameters live in one flat vector.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Per-layer activations of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct Cache {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Mlp {
    /// `sizes = [inputs, hidden..., 1]`. Hidden weights are Glorot-uniform,
    /// the output layer starts at zero so the initial network output is 0.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2 && *sizes.last().unwrap() == 1, "scalar output expected");
        let mut params = Vec::new();
        let last = sizes.len() - 2;
        for (l, w) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            for _ in 0..n_in * n_out {
                params.push(if l == last { 0.0 } else { rng.random_range(-limit..limit) });
            }
            params.extend(std::iter::repeat_n(0.0, n_out));
        }
        Mlp {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn new_cache(&self) -> Cache {
        Cache {
            acts: self.sizes.iter().map(|&n| vec![0.0; n]).collect(),
            delta: Vec::with_capacity(self.sizes.iter().copied().max().unwrap_or(1)),
            delta_prev: Vec::with_capacity(self.sizes.iter().copied().max().unwrap_or(1)),
        }
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn forward(&self, input: &[f64], cache: &mut Cache) -> f64 {
        cache.acts[0].copy_from_slice(input);
        let mut offset = 0;
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let (prev, next) = cache.acts.split_at_mut(l + 1);
            let x = &prev[l];
            let y = &mut next[0];
            let hidden = l + 1 < self.n_layers();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut s = b[o];
                for (wi, xi) in row.iter().zip(x.iter()) {
                    s += wi * xi;
                }
                y[o] = if hidden { s.tanh() } else { s };
            }
            offset += n_in * n_out + n_out;
        }
        cache.acts[self.n_layers()][0]
    }

    /// Accumulates `grad_out · ∂output/∂params` into `grads`, using the
    /// activations of the preceding [`Mlp::forward`] on `cache`.
    pub fn backward(&self, cache: &mut Cache, grad_out: f64, grads: &mut [f64]) {
        let layers = self.n_layers();
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        cache.delta.clear();
        cache.delta.push(grad_out);
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let x = &cache.acts[l];
            {
                let (gw, gb) = grads[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = cache.delta[o];
                    gb[o] += d;
                    for (g, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x.iter()) {
                        *g += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + n_in * n_out];
            cache.delta_prev.clear();
            cache.delta_prev.resize(n_in, 0.0);
            for o in 0..n_out {
                let d = cache.delta[o];
                for (p, wi) in cache.delta_prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *p += d * wi;
                }
            }
            for (p, a) in cache.delta_prev.iter_mut().zip(x.iter()) {
                *p *= 1.0 - a * a;
            }
            std::mem::swap(&mut cache.delta, &mut cache.delta_prev);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// Descent step along `grads` (gradient of a loss to minimize).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g;
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.learning_rate * mh / (vh.sqrt() + Self::EPS);
        }
    }
}
