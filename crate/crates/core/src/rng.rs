//! Reproducible noise streams.
//!
//! Every trajectory owns an independent ChaCha8 stream keyed by the master
//! seed, with the trajectory index as stream id. Each integration step
//! consumes exactly [`WORDS_PER_STEP`] 32-bit words, so the normals used at
//! `(seed, trajectory, step, channel)` are a pure function of those four
//! values and can be regenerated in any order or on any thread.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Four u64 draws per step: two Box–Muller pairs.
pub const WORDS_PER_STEP: u128 = 8;

/// Standard normal variates for one step, in fixed channel order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepNoise {
    pub reward_a: f64,
    pub reward_b: f64,
    pub eta_a: f64,
    pub eta_b: f64,
}

impl StepNoise {
    pub const ZERO: StepNoise = StepNoise {
        reward_a: 0.0,
        reward_b: 0.0,
        eta_a: 0.0,
        eta_b: 0.0,
    };

    /// The same draws with the two arms' channels exchanged.
    pub fn mirrored(self) -> StepNoise {
        StepNoise {
            reward_a: self.reward_b,
            reward_b: self.reward_a,
            eta_a: self.eta_b,
            eta_b: self.eta_a,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, trajectory: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        NoiseStream { rng }
    }

    /// Stream positioned at the start of `step`.
    pub fn at_step(seed: u64, trajectory: u64, step: u64) -> Self {
        let mut stream = NoiseStream::new(seed, trajectory);
        stream.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        stream
    }

    /// Uniform in (0, 1], 53-bit resolution.
    fn next_open_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One Box–Muller pair; consumes exactly two u64.
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_open_uniform();
        let u2 = self.next_open_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    pub fn next_step(&mut self) -> StepNoise {
        let (reward_a, reward_b) = self.next_normal_pair();
        let (eta_a, eta_b) = self.next_normal_pair();
        StepNoise {
            reward_a,
            reward_b,
            eta_a,
            eta_b,
        }
    }
}

/// Deterministic generator for training, shuffling and bootstrap resampling.
/// `purpose` separates independent uses of the same user seed.
pub fn aux_rng(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(purpose.wrapping_add(1 << 40));
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_sequential() {
        let mut seq = NoiseStream::new(42, 7);
        let draws: Vec<StepNoise> = (0..50).map(|_| seq.next_step()).collect();
        for step in [0u64, 1, 17, 49] {
            let mut jumped = NoiseStream::at_step(42, 7, step);
            assert_eq!(jumped.next_step(), draws[step as usize]);
        }
    }

    #[test]
    fn streams_differ_by_trajectory_and_seed() {
        let a = NoiseStream::new(1, 0).next_step();
        let b = NoiseStream::new(1, 1).next_step();
        let c = NoiseStream::new(2, 0).next_step();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn normals_have_unit_moments() {
        let mut s = NoiseStream::new(3, 0);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n / 4 {
            let z = s.next_step();
            for v in [z.reward_a, z.reward_b, z.eta_a, z.eta_b] {
                sum += v;
                sq += v * v;
            }
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }
}
