//! Two-armed bandit environment, tanh allocation rule and belief dynamics.
//!
//! Beliefs evolve either by the exact forgetting Q-learning map
//! ([`step_discrete`]) or by Euler–Maruyama integration of its Langevin limit
//! ([`euler_maruyama_step`]), whose drift and diffusion are the closed-form
//! fields of [`crate::fokker_planck`]. All state-dependent coefficients are
//! evaluated at the pre-step state (Ito reading: the investment is decided
//! before the rewards are observed).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fokker_planck;
use crate::rng::{NoiseStream, StepNoise};

/// Beliefs beyond this magnitude abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditConfig {
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
}

impl BanditConfig {
    pub fn new(mean_a: f64, mean_b: f64, var_a: f64, var_b: f64) -> Result<Self> {
        let config = BanditConfig {
            mean_a,
            mean_b,
            var_a,
            var_b,
        };
        config.validate()?;
        Ok(config)
    }

    /// Equal arms with Bernoulli-matched variance ⟨R⟩(1−⟨R⟩).
    pub fn symmetric() -> Self {
        BanditConfig {
            mean_a: 0.5,
            mean_b: 0.5,
            var_a: 0.25,
            var_b: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_a.is_finite() && self.mean_b.is_finite()) {
            return Err(Error::InvalidConfig("reward means must be finite".into()));
        }
        if !(self.var_a > 0.0 && self.var_b > 0.0) || !(self.var_a.is_finite() && self.var_b.is_finite()) {
            return Err(Error::InvalidConfig("reward variances must be finite and > 0".into()));
        }
        Ok(())
    }

    /// Exchange the roles of the two arms.
    pub fn mirrored(&self) -> Self {
        BanditConfig {
            mean_a: self.mean_b,
            mean_b: self.mean_a,
            var_a: self.var_b,
            var_b: self.var_a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    /// Learning and forgetting rate per unit time.
    pub beta: f64,
    /// Exploitation gain of the allocation rule.
    pub gamma: f64,
    /// Standard deviation of the exogenous belief noise.
    pub sigma_eta: f64,
}

impl AgentParams {
    pub fn new(beta: f64, gamma: f64, sigma_eta: f64) -> Result<Self> {
        let params = AgentParams {
            beta,
            gamma,
            sigma_eta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidConfig(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.sigma_eta >= 0.0 && self.sigma_eta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma_eta must be finite and >= 0, got {}",
                self.sigma_eta
            )));
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        AgentParams { gamma, ..*self }
    }

    /// Returns a message when the exogenous noise is not small compared to
    /// the reward variances.
    pub fn regularization_warning(&self, config: &BanditConfig) -> Option<String> {
        let eta2 = self.sigma_eta * self.sigma_eta;
        let floor = config.var_a.min(config.var_b);
        (eta2 > 0.01 * floor).then(|| {
            format!("sigma_eta^2 = {eta2:.3e} is not small against min reward variance {floor:.3e}")
        })
    }
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            beta: 0.1,
            gamma: 0.0,
            sigma_eta: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub r_hat_a: f64,
    pub r_hat_b: f64,
}

impl BeliefState {
    pub const fn new(r_hat_a: f64, r_hat_b: f64) -> Self {
        BeliefState { r_hat_a, r_hat_b }
    }

    /// Passive-learning fixed point of the symmetric bandit.
    pub const PASSIVE_EQUILIBRIUM: BeliefState = BeliefState::new(0.25, 0.25);

    pub fn delta(&self) -> f64 {
        self.r_hat_a - self.r_hat_b
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.r_hat_a, self.r_hat_b]
    }

    pub fn mirrored(&self) -> Self {
        BeliefState::new(self.r_hat_b, self.r_hat_a)
    }

    fn is_finite(&self) -> bool {
        self.r_hat_a.is_finite() && self.r_hat_b.is_finite()
    }
}

impl From<[f64; 2]> for BeliefState {
    fn from(x: [f64; 2]) -> Self {
        BeliefState::new(x[0], x[1])
    }
}

/// Fraction of the endowment invested in arm A for a belief difference `delta`.
#[inline]
pub fn allocation_from_delta(delta: f64, gamma: f64) -> f64 {
    0.5 * (1.0 + (gamma * delta).tanh())
}

/// Allocation rule `(1 + tanh[Γ (R̂^A − R̂^B)]) / 2`.
pub fn allocation(state: &BeliefState, gamma: f64) -> Result<f64> {
    if !state.is_finite() {
        return Err(Error::Domain(format!("non-finite beliefs {state:?}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("gamma must be >= 0, got {gamma}")));
    }
    Ok(allocation_from_delta(state.delta(), gamma))
}

/// Draws one reward per arm, A first, consuming exactly two normals.
pub fn sample_rewards(config: &BanditConfig, stream: &mut NoiseStream) -> (f64, f64) {
    let (za, zb) = stream.next_normal_pair();
    rewards_from_normals(config, za, zb)
}

fn rewards_from_normals(config: &BanditConfig, za: f64, zb: f64) -> (f64, f64) {
    (
        config.mean_a + config.var_a.sqrt() * za,
        config.mean_b + config.var_b.sqrt() * zb,
    )
}

/// One step of the forgetting Q-learning map with the allocation computed
/// from the current beliefs. `eta` holds two standard normals scaled by
/// `β σ_η` before being added to the beliefs.
pub fn step_discrete(
    state: &BeliefState,
    rewards: (f64, f64),
    params: &AgentParams,
    eta: [f64; 2],
) -> Result<BeliefState> {
    let a = allocation(state, params.gamma)?;
    step_discrete_with_allocation(state, rewards, a, params, eta)
}

/// [`step_discrete`] with an externally imposed allocation.
pub fn step_discrete_with_allocation(
    state: &BeliefState,
    rewards: (f64, f64),
    a: f64,
    params: &AgentParams,
    eta: [f64; 2],
) -> Result<BeliefState> {
    if !state.is_finite() || !rewards.0.is_finite() || !rewards.1.is_finite() || !a.is_finite() {
        return Err(Error::Domain("non-finite input to belief update".into()));
    }
    let beta = params.beta;
    let (ra, rb) = rewards;
    let mut next_a = state.r_hat_a + beta * a * (ra - state.r_hat_a) - beta * (1.0 - a) * state.r_hat_a;
    let mut next_b = state.r_hat_b + beta * (1.0 - a) * (rb - state.r_hat_b) - beta * a * state.r_hat_b;
    if params.sigma_eta > 0.0 {
        next_a += beta * params.sigma_eta * eta[0];
        next_b += beta * params.sigma_eta * eta[1];
    }
    Ok(BeliefState::new(next_a, next_b))
}

/// Result of one Euler–Maruyama step, exposing the coefficients that were used.
#[derive(Debug, Clone, Copy)]
pub struct EulerStep {
    pub next: BeliefState,
    pub allocation: f64,
    pub reward_a: f64,
    pub reward_b: f64,
    /// Drift evaluated at the pre-step state.
    pub drift: [f64; 2],
    /// Per-coordinate noise amplitude `sqrt(2 D_ii dt)` at the pre-step state.
    pub amplitude: [f64; 2],
}

/// Ito Euler–Maruyama step of `dR̂ = F dt + sqrt(2D) dW`.
///
/// The Wiener increment of each belief is assembled from that arm's reward
/// fluctuation and its exogenous noise, so realized rewards stay available
/// for the earned-reward observable.
pub fn euler_maruyama_step(
    state: &BeliefState,
    config: &BanditConfig,
    params: &AgentParams,
    dt: f64,
    z: &StepNoise,
) -> EulerStep {
    let a = allocation_from_delta(state.delta(), params.gamma);
    let drift = fokker_planck::drift(state, config, params);
    let diff = fokker_planck::diffusion(state, config, params);
    let (reward_a, reward_b) = rewards_from_normals(config, z.reward_a, z.reward_b);

    let eta = params.sigma_eta;
    let weights = [a * config.var_a.sqrt(), (1.0 - a) * config.var_b.sqrt()];
    let raw = [
        weights[0] * z.reward_a + eta * z.eta_a,
        weights[1] * z.reward_b + eta * z.eta_b,
    ];
    let mut amplitude = [0.0; 2];
    let mut x = state.as_array();
    for i in 0..2 {
        let norm = (weights[i] * weights[i] + eta * eta).sqrt();
        let xi = if norm > 0.0 { raw[i] / norm } else { 0.0 };
        amplitude[i] = (2.0 * diff.matrix[i][i] * dt).sqrt();
        x[i] += drift[i] * dt + amplitude[i] * xi;
    }
    EulerStep {
        next: x.into(),
        allocation: a,
        reward_a,
        reward_b,
        drift,
        amplitude,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Euler–Maruyama of the drift–diffusion model.
    #[default]
    Langevin,
    /// The forgetting Q-learning map itself; requires `dt = 1`.
    DiscreteMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub burn_in: usize,
    /// Keep one record every `stride` steps.
    pub stride: usize,
    pub initial: BeliefState,
    pub integrator: Integrator,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            n_steps: 10_000,
            dt: 1.0,
            seed: 0,
            burn_in: 5_000,
            stride: 1,
            initial: BeliefState::PASSIVE_EQUILIBRIUM,
            integrator: Integrator::Langevin,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps <= self.burn_in {
            return Err(Error::InvalidConfig(format!(
                "n_steps ({}) must exceed burn_in ({})",
                self.n_steps, self.burn_in
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.stride == 0 || !self.burn_in.is_multiple_of(self.stride) {
            return Err(Error::InvalidConfig("stride must be >= 1 and divide burn_in".into()));
        }
        if self.integrator == Integrator::DiscreteMap && self.dt != 1.0 {
            return Err(Error::InvalidConfig("the discrete map integrator requires dt = 1".into()));
        }
        if !self.initial.is_finite() {
            return Err(Error::InvalidConfig("initial beliefs must be finite".into()));
        }
        Ok(())
    }

    /// Time between two consecutive records.
    pub fn record_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Beliefs at the start of the step.
    pub state: BeliefState,
    pub allocation: f64,
    pub reward_a: f64,
    pub reward_b: f64,
    pub earned: f64,
}

impl StepRecord {
    fn new(state: BeliefState, allocation: f64, reward_a: f64, reward_b: f64) -> Self {
        StepRecord {
            state,
            allocation,
            reward_a,
            reward_b,
            earned: reward_a * allocation + reward_b * (1.0 - allocation),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: BanditConfig,
    pub params: AgentParams,
    pub dt: f64,
    pub seed: u64,
    pub trajectory_index: u64,
    /// Discarded initial steps.
    pub burn_in: usize,
    pub stride: usize,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    /// Records after the burn-in.
    pub fn stationary(&self) -> &[StepRecord] {
        let start = (self.burn_in / self.stride).min(self.records.len());
        &self.records[start..]
    }

    pub fn record_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }

    /// Post-burn-in belief coordinates.
    pub fn stationary_path(&self) -> Vec<[f64; 2]> {
        self.stationary().iter().map(|r| r.state.as_array()).collect()
    }

    /// Columnar CSV: `t,r_hat_a,r_hat_b,allocation,reward_a,reward_b,earned`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "r_hat_a", "r_hat_b", "allocation", "reward_a", "reward_b", "earned"])?;
        for (i, r) in self.records.iter().enumerate() {
            let t = (i * self.stride) as f64 * self.dt;
            w.write_record([
                t.to_string(),
                r.state.r_hat_a.to_string(),
                r.state.r_hat_b.to_string(),
                r.allocation.to_string(),
                r.reward_a.to_string(),
                r.reward_b.to_string(),
                r.earned.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn simulate(
    config: &BanditConfig,
    params: &AgentParams,
    spec: &SimulationSpec,
    trajectory_index: u64,
) -> Result<Trajectory> {
    simulate_from(config, params, spec, trajectory_index, spec.initial)
}

/// Like [`simulate`] but starting from an explicit initial state.
pub fn simulate_from(
    config: &BanditConfig,
    params: &AgentParams,
    spec: &SimulationSpec,
    trajectory_index: u64,
    initial: BeliefState,
) -> Result<Trajectory> {
    config.validate()?;
    params.validate()?;
    spec.validate()?;

    let mut stream = NoiseStream::new(spec.seed, trajectory_index);
    let mut records = Vec::with_capacity(spec.n_steps / spec.stride + 1);
    let mut state = initial;
    for step in 0..spec.n_steps {
        let z = stream.next_step();
        let (next, record) = match spec.integrator {
            Integrator::Langevin => {
                let s = euler_maruyama_step(&state, config, params, spec.dt, &z);
                (s.next, StepRecord::new(state, s.allocation, s.reward_a, s.reward_b))
            }
            Integrator::DiscreteMap => {
                let a = allocation(&state, params.gamma)?;
                let rewards = rewards_from_normals(config, z.reward_a, z.reward_b);
                let next = step_discrete_with_allocation(&state, rewards, a, params, [z.eta_a, z.eta_b])?;
                (next, StepRecord::new(state, a, rewards.0, rewards.1))
            }
        };
        if step % spec.stride == 0 {
            records.push(record);
        }
        if !(next.r_hat_a.abs() <= DIVERGENCE_LIMIT && next.r_hat_b.abs() <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergent {
                trajectory: trajectory_index,
                step,
                x: next.r_hat_a,
                y: next.r_hat_b,
            });
        }
        state = next;
    }

    Ok(Trajectory {
        config: *config,
        params: *params,
        dt: spec.dt,
        seed: spec.seed,
        trajectory_index,
        burn_in: spec.burn_in,
        stride: spec.stride,
        records,
    })
}

/// `n` independent trajectories with indices `0..n`, returned in index order.
pub fn simulate_ensemble(
    config: &BanditConfig,
    params: &AgentParams,
    spec: &SimulationSpec,
    n: usize,
) -> Result<Vec<Trajectory>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| simulate(config, params, spec, i))
        .collect()
}

/// Per-step earned reward after the burn-in.
pub fn earned_reward_series(traj: &Trajectory) -> Vec<f64> {
    traj.stationary().iter().map(|r| r.earned).collect()
}
