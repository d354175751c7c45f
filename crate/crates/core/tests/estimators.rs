//! Estimators on processes with a known entropy production rate.

use belief_thermo::bandit::{simulate_ensemble, simulate_from, AgentParams, BanditConfig, SimulationSpec};
use belief_thermo::coarse::GridSpec;
use belief_thermo::fokker_planck::{DriftDiffusionModel, LocalFields};
use belief_thermo::irreversibility::*;
use belief_thermo::rng::NoiseStream;

/// Unit-temperature linear process `dX = −(I + ωJ) X dt + √2 dW`. Its
/// stationary law is standard normal and its entropy production is `2ω²`.
struct RotatingOu {
    omega: f64,
}

impl DriftDiffusionModel for RotatingOu {
    fn fields(&self, x: [f64; 2]) -> LocalFields {
        let w = self.omega;
        LocalFields {
            drift: [-x[0] + w * x[1], -x[1] - w * x[0]],
            diffusion: [[1.0, 0.0], [0.0, 1.0]],
            div_diffusion: [0.0, 0.0],
            div_drift: -2.0,
            div_div_diffusion: 0.0,
        }
    }
}

/// Sampled every `stride · dt`, started from the stationary law.
fn rotating_paths(omega: f64, n_paths: usize, n_records: usize, seed: u64) -> Vec<Vec<[f64; 2]>> {
    let (dt, stride): (f64, usize) = (0.005, 20);
    let model = RotatingOu { omega };
    (0..n_paths)
        .map(|p| {
            let mut rng = NoiseStream::new(seed, p as u64);
            let (a, b) = rng.next_normal_pair();
            let mut x = [a, b];
            let mut out = Vec::with_capacity(n_records);
            for _ in 0..n_records {
                out.push(x);
                for _ in 0..stride {
                    let f = model.fields(x).drift;
                    let (za, zb) = rng.next_normal_pair();
                    let noise = (2.0 * dt).sqrt();
                    x = [x[0] + f[0] * dt + noise * za, x[1] + f[1] * dt + noise * zb];
                }
            }
            out
        })
        .collect()
}

const INTERVAL: f64 = 0.1;

fn quick_neural() -> NeuralSettings {
    NeuralSettings {
        hidden: vec![32, 32],
        max_epochs: 20,
        n_bootstrap: 50,
        ..Default::default()
    }
}

fn quick_classifier() -> ClassifierSettings {
    ClassifierSettings {
        n_bootstrap: 50,
        ..Default::default()
    }
}

#[test]
fn monte_carlo_recovers_rotational_entropy_production() {
    let omega = 0.5;
    let paths = rotating_paths(omega, 20, 5_000, 1);
    let est = phi_monte_carlo_model(&paths, INTERVAL, &RotatingOu { omega }, &MonteCarloSettings::default()).unwrap();
    let expected = 2.0 * omega * omega;
    assert!((est.value - expected).abs() < 4.0 * est.std_error + 0.02, "{} ± {}", est.value, est.std_error);
}

#[test]
fn trajectory_estimators_bound_rotational_entropy_production() {
    let omega = 0.5;
    let paths = rotating_paths(omega, 20, 2_000, 2);
    let ds = TransitionDataset::from_paths(&paths, INTERVAL, 1, 1).unwrap();
    let expected = 2.0 * omega * omega;
    let nn = phi_neural(&ds, &quick_neural()).unwrap();
    let gbt = phi_classifier(&ds, &quick_classifier()).unwrap();
    for est in [&nn, &gbt] {
        assert!(est.value > 0.25 * expected, "{:?} {}", est.estimator, est.value);
        assert!(est.value < expected + 4.0 * est.std_error + 0.05, "{:?} {}", est.estimator, est.value);
    }
}

#[test]
fn trajectory_estimators_vanish_on_reversible_data() {
    let paths = rotating_paths(0.0, 20, 2_000, 3);
    let ds = TransitionDataset::from_paths(&paths, INTERVAL, 1, 1).unwrap();
    let nn = phi_neural(&ds, &quick_neural()).unwrap();
    let gbt = phi_classifier(&ds, &quick_classifier()).unwrap();
    for est in [&nn, &gbt] {
        assert!(est.value.abs() < 0.05 + 4.0 * est.std_error, "{:?} {} ± {}", est.estimator, est.value, est.std_error);
    }
    let auc = gbt.metadata["auc"].as_f64().unwrap();
    assert!((auc - 0.5).abs() < 0.03, "auc {auc}");
}

#[test]
fn trained_score_is_exactly_antisymmetric() {
    let paths = rotating_paths(0.5, 10, 1_100, 4);
    let ds = TransitionDataset::from_paths(&paths, INTERVAL, 1, 1).unwrap();
    let score = train_neural_score(&ds, &quick_neural()).unwrap();
    let rev = ds.reversed();
    for i in (0..ds.len()).step_by(101) {
        let (f, b) = (score.score(ds.pair(i)), score.score(rev.pair(i)));
        assert!((f + b).abs() < 1e-12 * (1.0 + f.abs()), "{f} vs {b}");
    }
    assert!((score.mean_score(&ds) + score.mean_score(&rev)).abs() < 1e-10);
}

#[test]
fn estimators_refuse_small_datasets() {
    let paths = rotating_paths(0.5, 2, 100, 5);
    let ds = TransitionDataset::from_paths(&paths, INTERVAL, 1, 1).unwrap();
    assert!(matches!(phi_neural(&ds, &quick_neural()), Err(belief_thermo::Error::InsufficientData { .. })));
    assert!(matches!(phi_classifier(&ds, &quick_classifier()), Err(belief_thermo::Error::InsufficientData { .. })));
    let model = RotatingOu { omega: 0.0 };
    assert!(phi_monte_carlo_model(&paths[..1], INTERVAL, &model, &MonteCarloSettings::default()).is_err());
}

#[test]
fn lyapunov_series_is_flat_at_stationarity() {
    let config = BanditConfig::symmetric();
    let params = AgentParams::new(0.1, 0.0, 0.01).unwrap();
    let warm = SimulationSpec {
        n_steps: 3_000,
        burn_in: 1_000,
        ..Default::default()
    };
    let source = simulate_ensemble(&config, &params, &warm, 400).unwrap();
    let settings = LyapunovSettings {
        n_bootstrap: 50,
        ..Default::default()
    };
    let pooled: Vec<Vec<[f64; 2]>> = source.iter().map(|t| t.stationary_path()).collect();
    let reference = stationary_reference(&pooled, &settings.grid, settings.pseudo_count).unwrap();

    // Members start from the last state of each warm path.
    let spec = SimulationSpec {
        n_steps: 101,
        burn_in: 0,
        seed: 99,
        ..Default::default()
    };
    let ensemble: Vec<_> = source
        .iter()
        .enumerate()
        .map(|(i, t)| simulate_from(&config, &params, &spec, i as u64, t.records.last().unwrap().state).unwrap())
        .collect();
    let series = lyapunov_series(&ensemble, &reference, &[0.0, 25.0, 50.0, 100.0], &settings).unwrap();
    for p in &series {
        assert!(p.kl.abs() < 0.05 + 4.0 * p.std_error, "t={} kl={} ± {}", p.time, p.kl, p.std_error);
    }
}

#[test]
fn lyapunov_series_decays_from_a_displaced_start() {
    let config = BanditConfig::symmetric();
    let params = AgentParams::new(0.1, 0.0, 0.01).unwrap();
    let settings = LyapunovSettings {
        grid: GridSpec::square(-0.1, 0.7, 10),
        n_bootstrap: 50,
        ..Default::default()
    };
    let warm = SimulationSpec {
        n_steps: 3_000,
        burn_in: 1_000,
        ..Default::default()
    };
    let source = simulate_ensemble(&config, &params, &warm, 200).unwrap();
    let pooled: Vec<Vec<[f64; 2]>> = source.iter().map(|t| t.stationary_path()).collect();
    let reference = stationary_reference(&pooled, &settings.grid, settings.pseudo_count).unwrap();
    let spec = SimulationSpec {
        n_steps: 201,
        burn_in: 0,
        seed: 7,
        initial: belief_thermo::BeliefState::new(0.55, 0.05),
        ..Default::default()
    };
    let ensemble = simulate_ensemble(&config, &params, &spec, 400).unwrap();
    let series = lyapunov_series(&ensemble, &reference, &[0.0, 10.0, 20.0, 30.0, 200.0], &settings).unwrap();
    let kl: Vec<f64> = series.iter().map(|p| p.kl).collect();
    // Strictly decreasing through the transient, then at the noise level.
    assert!(kl[..4].windows(2).all(|w| w[1] < w[0]), "{kl:?}");
    assert!(kl[4].abs() < 0.05 + 4.0 * series[4].std_error, "{kl:?}");
}
