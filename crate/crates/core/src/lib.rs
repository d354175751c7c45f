//! Stochastic thermodynamics of two-armed bandit learners.
//!
//! Beliefs of a forgetting Q-learner with softmax allocation are simulated
//! as a two-dimensional diffusion, analysed through their Fokker–Planck
//! fields, coarse-grained into Markov chains, and scored by the
//! irreversibility rate of their stationary dynamics.

// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bandit;
pub mod coarse;
pub mod error;
pub mod experiments;
pub mod fokker_planck;
pub mod irreversibility;
pub mod rng;
pub mod stats;

pub use bandit::{AgentParams, BanditConfig, BeliefState, SimulationSpec, Trajectory};
pub use error::{Error, Result};
