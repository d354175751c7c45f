//! Python bindings: the analytic fields, simulation, Φ estimators and the
//! CLI commands. Failures raise `ValueError` carrying the CLI error JSON.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use belief_thermo::bandit::{self, SimulationSpec};
use belief_thermo::experiments::commands::{error_json, execute, Command, Invocation};
use belief_thermo::experiments::ScenarioName;
use belief_thermo::fokker_planck::{self, BanditModel, DeltaGrid};
use belief_thermo::irreversibility::{
    phi_classifier, phi_monte_carlo_model, phi_neural, ClassifierSettings, MonteCarloSettings, NeuralSettings,
    PhiEstimate, TransitionDataset,
};
use belief_thermo::Error;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(error_json(&e).to_string())
}

#[pyclass(name = "BanditConfig", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyBanditConfig(bandit::BanditConfig);

#[pymethods]
impl PyBanditConfig {
    #[new]
    #[pyo3(signature = (mean_a=0.5, mean_b=0.5, var_a=0.25, var_b=0.25))]
    fn new(mean_a: f64, mean_b: f64, var_a: f64, var_b: f64) -> PyResult<Self> {
        bandit::BanditConfig::new(mean_a, mean_b, var_a, var_b)
            .map(PyBanditConfig)
            .map_err(py_err)
    }

    #[getter]
    fn mean_a(&self) -> f64 {
        self.0.mean_a
    }
    #[getter]
    fn mean_b(&self) -> f64 {
        self.0.mean_b
    }
    #[getter]
    fn var_a(&self) -> f64 {
        self.0.var_a
    }
    #[getter]
    fn var_b(&self) -> f64 {
        self.0.var_b
    }

    fn __repr__(&self) -> String {
        let c = &self.0;
        format!("BanditConfig(mean_a={}, mean_b={}, var_a={}, var_b={})", c.mean_a, c.mean_b, c.var_a, c.var_b)
    }
}

#[pyclass(name = "AgentParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyAgentParams(bandit::AgentParams);

#[pymethods]
impl PyAgentParams {
    #[new]
    #[pyo3(signature = (beta=0.1, gamma=0.0, sigma_eta=0.01))]
    fn new(beta: f64, gamma: f64, sigma_eta: f64) -> PyResult<Self> {
        bandit::AgentParams::new(beta, gamma, sigma_eta)
            .map(PyAgentParams)
            .map_err(py_err)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }
    #[getter]
    fn sigma_eta(&self) -> f64 {
        self.0.sigma_eta
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!("AgentParams(beta={}, gamma={}, sigma_eta={})", p.beta, p.gamma, p.sigma_eta)
    }
}

#[pyfunction]
fn allocation(delta: f64, gamma: f64) -> f64 {
    bandit::allocation_from_delta(delta, gamma)
}

/// Drift, diffusion, thermodynamic force and its curl at one point.
#[pyfunction]
fn fields<'py>(
    py: Python<'py>,
    x: f64,
    y: f64,
    config: PyBanditConfig,
    params: PyAgentParams,
) -> PyResult<Bound<'py, PyDict>> {
    let state = bandit::BeliefState::new(x, y);
    let (c, p) = (&config.0, &params.0);
    let d = fokker_planck::diffusion(&state, c, p);
    let out = PyDict::new(py);
    out.set_item("drift", fokker_planck::drift(&state, c, p).to_vec())?;
    out.set_item("diffusion", [d.matrix[0][0], d.matrix[1][1]].to_vec())?;
    out.set_item("force", fokker_planck::thermodynamic_force(&state, c, p).map_err(py_err)?.to_vec())?;
    out.set_item("curl", fokker_planck::curl_force(&state, c, p).map_err(py_err)?)?;
    Ok(out)
}

/// Stationary law of the belief difference as `(delta, pdf)`.
#[pyfunction]
#[pyo3(signature = (config, params, lo=-0.8, hi=0.8, n=3201))]
fn delta_pdf(config: PyBanditConfig, params: PyAgentParams, lo: f64, hi: f64, n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let m = fokker_planck::stationary_delta_pdf(&config.0, &params.0, &DeltaGrid { lo, hi, n }).map_err(py_err)?;
    Ok((m.delta, m.pdf))
}

#[pyfunction]
fn analytic_mean_reward(config: PyBanditConfig, params: PyAgentParams) -> PyResult<f64> {
    fokker_planck::analytic_mean_reward(&config.0, &params.0).map_err(py_err)
}

/// One trajectory as columns; the burn-in records are kept.
#[pyfunction]
#[pyo3(signature = (config, params, n_steps, dt=1.0, seed=0, stride=1, trajectory=0))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    config: PyBanditConfig,
    params: PyAgentParams,
    n_steps: usize,
    dt: f64,
    seed: u64,
    stride: usize,
    trajectory: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = SimulationSpec {
        n_steps,
        dt,
        seed,
        burn_in: 0,
        stride,
        ..Default::default()
    };
    let t = py
        .detach(|| bandit::simulate(&config.0, &params.0, &spec, trajectory))
        .map_err(py_err)?;
    let col = |f: fn(&bandit::StepRecord) -> f64| t.records.iter().map(f).collect::<Vec<f64>>();
    let out = PyDict::new(py);
    let interval = t.record_interval();
    out.set_item("t", (0..t.records.len()).map(|i| i as f64 * interval).collect::<Vec<_>>())?;
    out.set_item("r_hat_a", col(|r| r.state.r_hat_a))?;
    out.set_item("r_hat_b", col(|r| r.state.r_hat_b))?;
    out.set_item("allocation", col(|r| r.allocation))?;
    out.set_item("reward_a", col(|r| r.reward_a))?;
    out.set_item("reward_b", col(|r| r.reward_b))?;
    out.set_item("earned", col(|r| r.earned))?;
    Ok(out)
}

fn pair(e: PhiEstimate) -> (f64, f64) {
    (e.value, e.std_error)
}

/// Monte Carlo Φ over stationary paths of the bandit model, `(value, se)`.
#[pyfunction]
fn phi_monte_carlo(
    py: Python<'_>,
    paths: Vec<Vec<[f64; 2]>>,
    sample_interval: f64,
    config: PyBanditConfig,
    params: PyAgentParams,
) -> PyResult<(f64, f64)> {
    let model = BanditModel::new(config.0, params.0);
    py.detach(|| phi_monte_carlo_model(&paths, sample_interval, &model, &MonteCarloSettings::default()))
        .map(pair)
        .map_err(py_err)
}

fn dataset(paths: &[Vec<[f64; 2]>], sample_interval: f64, lag: usize) -> PyResult<TransitionDataset> {
    TransitionDataset::from_paths(paths, sample_interval, lag, 1).map_err(py_err)
}

/// Neural Φ estimate from pairs `lag` samples apart, `(value, se)`.
#[pyfunction]
#[pyo3(signature = (paths, sample_interval, lag=1, seed=0))]
fn phi_neural_paths(
    py: Python<'_>,
    paths: Vec<Vec<[f64; 2]>>,
    sample_interval: f64,
    lag: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let ds = dataset(&paths, sample_interval, lag)?;
    let settings = NeuralSettings {
        seed,
        ..Default::default()
    };
    py.detach(|| phi_neural(&ds, &settings)).map(pair).map_err(py_err)
}

/// Classifier Φ estimate from pairs `lag` samples apart, `(value, se)`.
#[pyfunction]
#[pyo3(signature = (paths, sample_interval, lag=1, seed=0))]
fn phi_classifier_paths(
    py: Python<'_>,
    paths: Vec<Vec<[f64; 2]>>,
    sample_interval: f64,
    lag: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let ds = dataset(&paths, sample_interval, lag)?;
    let settings = ClassifierSettings {
        seed,
        ..Default::default()
    };
    py.detach(|| phi_classifier(&ds, &settings)).map(pair).map_err(py_err)
}

/// Runs a CLI command and returns the written paths.
#[pyfunction]
#[pyo3(signature = (command, out, scenario=None, gamma=Vec::new(), config=None, seed=None, overrides=None))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    command: &str,
    out: PathBuf,
    scenario: Option<&str>,
    gamma: Vec<f64>,
    config: Option<PathBuf>,
    seed: Option<u64>,
    overrides: Option<&str>,
) -> PyResult<Vec<String>> {
    let command = match command {
        "simulate" => Command::Simulate,
        "sweep" => Command::Sweep,
        "currents" => Command::Currents,
        "pdf-check" => Command::PdfCheck,
        "phi" => Command::Phi,
        other => return Err(py_err(Error::InvalidConfig(format!("unknown command {other:?}")))),
    };
    let scenario = scenario.map(str::parse::<ScenarioName>).transpose().map_err(py_err)?;
    let overrides = match overrides {
        Some(s) => serde_json::from_str(s).map_err(|e| py_err(e.into()))?,
        None => serde_json::Value::Null,
    };
    let inv = Invocation {
        command,
        scenario,
        gamma,
        config,
        seed,
        out,
        overrides,
    };
    let files = py.detach(|| execute(&inv)).map_err(py_err)?;
    Ok(files.iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
fn belief_thermo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBanditConfig>()?;
    m.add_class::<PyAgentParams>()?;
    m.add_function(wrap_pyfunction!(allocation, m)?)?;
    m.add_function(wrap_pyfunction!(fields, m)?)?;
    m.add_function(wrap_pyfunction!(delta_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_mean_reward, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(phi_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(phi_neural_paths, m)?)?;
    m.add_function(wrap_pyfunction!(phi_classifier_paths, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
