//! Scenario presets, Γ sweeps and the data exports behind each figure.

pub mod commands;

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bandit::{
    earned_reward_series, simulate_ensemble, AgentParams, BanditConfig, BeliefState, Integrator, SimulationSpec,
    Trajectory,
};
use crate::coarse::{quantile, CellPaths, CoarseGrainModel, CurrentField, GridSpec};
use crate::error::{Error, Result};
use crate::fokker_planck::{analytic_mean_reward_on, field_scan, stationary_delta_pdf_with, DeltaBeliefModel, DeltaGrid, FieldSample};
use crate::irreversibility::{
    entropy_production_pi_bootstrap, phi_classifier, phi_monte_carlo_model, phi_neural, ClassifierSettings, Estimator,
    MonteCarloSettings, NeuralSettings, PhiEstimate, TransitionDataset,
};
use crate::stats::mean_se;

pub const DEFAULT_GAMMA_GRID: [f64; 11] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Symmetric,
    AsymMean,
    AsymVar,
    Custom,
}

impl std::str::FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(ScenarioName::Symmetric),
            "asym_mean" => Ok(ScenarioName::AsymMean),
            "asym_var" => Ok(ScenarioName::AsymVar),
            "custom" => Ok(ScenarioName::Custom),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario {other:?} (symmetric, asym_mean, asym_var, custom)"
            ))),
        }
    }
}

/// Which Φ estimators run and how their data is prepared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSuite {
    pub monte_carlo: bool,
    pub neural: bool,
    pub classifier: bool,
    pub schnakenberg: bool,
    /// Time between the two ends of a transition pair, and the coarse-grained
    /// sampling interval.
    pub lag_time: f64,
    /// Upper bound on transition pairs fed to the learned estimators.
    pub max_pairs: usize,
    pub monte_carlo_settings: MonteCarloSettings,
    pub neural_settings: NeuralSettings,
    pub classifier_settings: ClassifierSettings,
    pub n_bootstrap: usize,
}

impl Default for EstimatorSuite {
    fn default() -> Self {
        EstimatorSuite {
            monte_carlo: true,
            neural: true,
            classifier: true,
            schnakenberg: true,
            lag_time: 1.0,
            max_pairs: 50_000,
            monte_carlo_settings: MonteCarloSettings::default(),
            neural_settings: NeuralSettings::default(),
            classifier_settings: ClassifierSettings::default(),
            n_bootstrap: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentsSettings {
    pub grid: GridSpec,
    /// Time between the coarse-grained samples.
    pub lag_time: f64,
    pub n_surrogates: usize,
    /// Length of the time-reversed surrogate blocks, in units of time.
    pub block_time: f64,
    /// Surrogate quantile used as the noise floor.
    pub floor_quantile: f64,
    /// Cells above this fraction of the peak occupation count as modes.
    pub mode_fraction: f64,
    /// Points per axis of the exported field scan.
    pub scan_points: usize,
}

impl Default for CurrentsSettings {
    fn default() -> Self {
        CurrentsSettings {
            grid: GridSpec::default(),
            lag_time: 1.0,
            n_surrogates: 200,
            block_time: 100.0,
            floor_quantile: 0.99,
            mode_fraction: 0.1,
            scan_points: 41,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfSettings {
    pub grid: DeltaGrid,
    pub n_bins: usize,
    pub include_subleading: bool,
}

impl Default for PdfSettings {
    fn default() -> Self {
        PdfSettings {
            grid: DeltaGrid::default(),
            n_bins: 80,
            include_subleading: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: ScenarioName,
    pub config: BanditConfig,
    pub params: AgentParams,
    pub gamma_grid: Vec<f64>,
    pub n_trajectories: usize,
    pub n_steps: usize,
    pub burn_in: usize,
    pub dt: f64,
    pub stride: usize,
    pub seed: u64,
    pub integrator: Integrator,
    pub initial: BeliefState,
    pub estimators: EstimatorSuite,
    pub currents: CurrentsSettings,
    pub pdf: PdfSettings,
}

impl Scenario {
    pub fn preset(name: ScenarioName) -> Self {
        let config = match name {
            ScenarioName::Symmetric | ScenarioName::Custom => BanditConfig::symmetric(),
            ScenarioName::AsymMean => BanditConfig {
                mean_a: 0.51,
                mean_b: 0.49,
                var_a: 0.25,
                var_b: 0.25,
            },
            ScenarioName::AsymVar => BanditConfig {
                mean_a: 0.5,
                mean_b: 0.5,
                var_a: 0.125,
                var_b: 0.25,
            },
        };
        Scenario {
            name,
            config,
            params: AgentParams::default(),
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            n_trajectories: 200,
            n_steps: 10_000,
            burn_in: 5_000,
            dt: 1.0,
            stride: 1,
            seed: 0,
            integrator: Integrator::Langevin,
            initial: BeliefState::PASSIVE_EQUILIBRIUM,
            estimators: EstimatorSuite::default(),
            currents: CurrentsSettings::default(),
            pdf: PdfSettings::default(),
        }
    }

    /// Preset, then `file` values, then `overrides` (both JSON objects,
    /// merged key by key), validated.
    pub fn resolve(name: Option<ScenarioName>, file: Option<&Value>, overrides: &Value) -> Result<Self> {
        let name = match name {
            Some(n) => n,
            None => match file.and_then(|f| f.get("name")) {
                Some(v) => serde_json::from_value(v.clone())?,
                None => ScenarioName::Symmetric,
            },
        };
        let mut value = serde_json::to_value(Scenario::preset(name))?;
        if let Some(f) = file {
            if !f.is_object() {
                return Err(Error::InvalidConfig("config file must hold a JSON object".into()));
            }
            merge(&mut value, f);
        }
        merge(&mut value, overrides);
        value["name"] = serde_json::to_value(name)?;
        let scenario: Scenario =
            serde_json::from_value(value).map_err(|e| Error::InvalidConfig(format!("config: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.params.validate()?;
        self.simulation_spec().validate()?;
        if self.gamma_grid.is_empty() {
            return Err(Error::InvalidConfig("gamma_grid must be non-empty".into()));
        }
        if self.gamma_grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidConfig("gamma_grid values must be finite and >= 0".into()));
        }
        if self.gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("gamma_grid must be strictly increasing".into()));
        }
        if self.n_trajectories == 0 {
            return Err(Error::InvalidConfig("n_trajectories must be >= 1".into()));
        }
        if !(self.estimators.lag_time > 0.0) || !(self.currents.lag_time > 0.0) {
            return Err(Error::InvalidConfig("lag_time must be > 0".into()));
        }
        self.currents.grid.validate()?;
        Ok(())
    }

    pub fn simulation_spec(&self) -> SimulationSpec {
        SimulationSpec {
            n_steps: self.n_steps,
            dt: self.dt,
            seed: self.seed,
            burn_in: self.burn_in,
            stride: self.stride,
            initial: self.initial,
            integrator: self.integrator,
        }
    }

    pub fn params_at(&self, gamma: f64) -> AgentParams {
        self.params.with_gamma(gamma)
    }

    /// The ensemble at exploitation `gamma`; every Γ shares the seed family.
    pub fn simulate(&self, gamma: f64) -> Result<Vec<Trajectory>> {
        simulate_ensemble(&self.config, &self.params_at(gamma), &self.simulation_spec(), self.n_trajectories)
    }

    pub fn record_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Every `k`-th post-burn-in point with `k·interval ≈ lag_time`.
fn thinned_paths(trajectories: &[Trajectory], lag_time: f64) -> (Vec<Vec<[f64; 2]>>, f64) {
    let interval = trajectories.first().map(|t| t.record_interval()).unwrap_or(1.0);
    let k = ((lag_time / interval).round() as usize).max(1);
    let paths = trajectories
        .iter()
        .map(|t| t.stationary().iter().step_by(k).map(|r| r.state.as_array()).collect())
        .collect();
    (paths, interval * k as f64)
}

/// Non-overlapping transition pairs at `lag_time`, thinned to at most
/// `max_pairs`.
pub fn transition_dataset(trajectories: &[Trajectory], lag_time: f64, max_pairs: usize) -> Result<TransitionDataset> {
    let interval = trajectories
        .first()
        .map(|t| t.record_interval())
        .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let lag = ((lag_time / interval).round() as usize).max(1);
    let available: usize = trajectories.iter().map(|t| t.stationary().len().saturating_sub(lag)).sum();
    let spacing = lag.max(available.div_ceil(max_pairs.max(1)));
    TransitionDataset::from_trajectories(trajectories, lag, spacing)
}

/// Estimates from one ensemble; failures are kept per estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiRun {
    pub gamma: f64,
    pub estimates: Vec<PhiEstimate>,
    pub errors: Vec<(Estimator, String)>,
}

impl PhiRun {
    pub fn get(&self, estimator: Estimator) -> Option<&PhiEstimate> {
        self.estimates.iter().find(|e| e.estimator == estimator)
    }
}

pub fn estimate_phi(scenario: &Scenario, gamma: f64, trajectories: &[Trajectory]) -> PhiRun {
    let suite = &scenario.estimators;
    let params = scenario.params_at(gamma);
    let mut run = PhiRun {
        gamma,
        estimates: Vec::new(),
        errors: Vec::new(),
    };
    let mut record = |estimator: Estimator, r: Result<PhiEstimate>| match r {
        Ok(e) => run.estimates.push(e.with_meta("gamma", gamma)),
        Err(e) => run.errors.push((estimator, e.to_string())),
    };
    if suite.monte_carlo {
        let paths: Vec<Vec<[f64; 2]>> = trajectories.iter().map(|t| t.stationary_path()).collect();
        let model = crate::fokker_planck::BanditModel::new(scenario.config, params);
        record(
            Estimator::MonteCarlo,
            phi_monte_carlo_model(&paths, scenario.record_interval(), &model, &suite.monte_carlo_settings),
        );
    }
    if suite.neural || suite.classifier {
        match transition_dataset(trajectories, suite.lag_time, suite.max_pairs) {
            Ok(ds) => {
                if suite.neural {
                    record(Estimator::Neural, phi_neural(&ds, &suite.neural_settings));
                }
                if suite.classifier {
                    record(Estimator::Classifier, phi_classifier(&ds, &suite.classifier_settings));
                }
            }
            Err(e) => {
                for (on, est) in [(suite.neural, Estimator::Neural), (suite.classifier, Estimator::Classifier)] {
                    if on {
                        run.errors.push((est, e.to_string()));
                    }
                }
            }
        }
    }
    if suite.schnakenberg {
        let (paths, lag) = thinned_paths(trajectories, suite.lag_time);
        let r = CellPaths::from_points(&paths, scenario.currents.grid, lag)
            .and_then(|cp| entropy_production_pi_bootstrap(&cp, suite.n_bootstrap, scenario.seed));
        match r {
            Ok(e) => run.estimates.push(e.with_meta("gamma", gamma)),
            Err(e) => run.errors.push((Estimator::Schnakenberg, e.to_string())),
        }
    }
    run
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub mean_abs_delta: f64,
    pub mean_abs_delta_se: f64,
    pub mean_delta: f64,
    /// Fraction of post-burn-in time with `δ > 0`.
    pub frac_delta_positive: f64,
    pub mean_reward: f64,
    /// Mean earned reward minus the Γ = 0 baseline from the same seeds.
    pub excess_reward: f64,
    pub excess_reward_se: f64,
    /// Stationary mean reward from the 1-D law of δ; NaN where that law
    /// cannot be normalized on the scenario grid.
    pub analytic_reward: f64,
    /// `analytic_reward` minus its Γ = 0 value.
    pub analytic_excess_reward: f64,
    pub phi: PhiRun,
    pub errors: Vec<String>,
}

struct EnsembleSummary {
    abs_delta: Vec<f64>,
    delta: Vec<f64>,
    positive: Vec<f64>,
    reward: Vec<f64>,
}

fn summarize(trajectories: &[Trajectory]) -> EnsembleSummary {
    let mut s = EnsembleSummary {
        abs_delta: Vec::new(),
        delta: Vec::new(),
        positive: Vec::new(),
        reward: Vec::new(),
    };
    for t in trajectories {
        let recs = t.stationary();
        let n = recs.len().max(1) as f64;
        s.abs_delta.push(recs.iter().map(|r| r.state.delta().abs()).sum::<f64>() / n);
        s.delta.push(recs.iter().map(|r| r.state.delta()).sum::<f64>() / n);
        s.positive.push(recs.iter().filter(|r| r.state.delta() > 0.0).count() as f64 / n);
        let earned = earned_reward_series(t);
        s.reward.push(earned.iter().sum::<f64>() / n);
    }
    s
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Metrics and Φ estimates at every Γ of the scenario grid.
pub fn run_sweep(scenario: &Scenario) -> Result<Vec<SweepRow>> {
    scenario.validate()?;
    let baseline = summarize(&scenario.simulate(0.0)?);
    let analytic = |g: f64| {
        analytic_mean_reward_on(&scenario.config, &scenario.params_at(g), &scenario.pdf.grid).unwrap_or(f64::NAN)
    };
    let analytic_baseline = analytic(0.0);
    let mut rows = Vec::with_capacity(scenario.gamma_grid.len());
    for &gamma in &scenario.gamma_grid {
        let analytic_reward = analytic(gamma);
        let analytic_excess_reward = analytic_reward - analytic_baseline;
        let trajectories = match scenario.simulate(gamma) {
            Ok(t) => t,
            Err(e) => {
                rows.push(SweepRow {
                    gamma,
                    mean_abs_delta: f64::NAN,
                    mean_abs_delta_se: f64::NAN,
                    mean_delta: f64::NAN,
                    frac_delta_positive: f64::NAN,
                    mean_reward: f64::NAN,
                    excess_reward: f64::NAN,
                    excess_reward_se: f64::NAN,
                    analytic_reward,
                    analytic_excess_reward,
                    phi: PhiRun {
                        gamma,
                        estimates: Vec::new(),
                        errors: Vec::new(),
                    },
                    errors: vec![format!("simulation: {e}")],
                });
                continue;
            }
        };
        let s = summarize(&trajectories);
        let abs = mean_se(&s.abs_delta);
        let excess: Vec<f64> = s.reward.iter().zip(&baseline.reward).map(|(a, b)| a - b).collect();
        let ex = mean_se(&excess);
        let phi = estimate_phi(scenario, gamma, &trajectories);
        let errors = phi.errors.iter().map(|(e, m)| format!("{}: {m}", e.as_str())).collect();
        rows.push(SweepRow {
            gamma,
            mean_abs_delta: abs.mean,
            mean_abs_delta_se: abs.std_error,
            mean_delta: mean(&s.delta),
            frac_delta_positive: mean(&s.positive),
            mean_reward: mean(&s.reward),
            excess_reward: ex.mean,
            excess_reward_se: ex.std_error,
            analytic_reward,
            analytic_excess_reward,
            phi,
            errors,
        });
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 19] = [
    "gamma",
    "mean_abs_delta",
    "mean_abs_delta_se",
    "mean_delta",
    "frac_delta_positive",
    "mean_reward",
    "excess_reward",
    "excess_reward_se",
    "analytic_reward",
    "analytic_excess_reward",
    "phi_mc",
    "phi_mc_se",
    "phi_nn",
    "phi_nn_se",
    "phi_gbt",
    "phi_gbt_se",
    "pi_coarse",
    "pi_coarse_se",
    "errors",
];

fn finite_or_empty(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.gamma.to_string(),
            r.mean_abs_delta.to_string(),
            r.mean_abs_delta_se.to_string(),
            r.mean_delta.to_string(),
            r.frac_delta_positive.to_string(),
            r.mean_reward.to_string(),
            r.excess_reward.to_string(),
            r.excess_reward_se.to_string(),
            finite_or_empty(r.analytic_reward),
            finite_or_empty(r.analytic_excess_reward),
        ];
        for est in [Estimator::MonteCarlo, Estimator::Neural, Estimator::Classifier, Estimator::Schnakenberg] {
            match r.phi.get(est) {
                Some(e) => {
                    rec.push(e.value.to_string());
                    rec.push(e.std_error.to_string());
                }
                None => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            }
        }
        rec.push(r.errors.join("; "));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Coarse-grained occupation and currents with their surrogate noise floors.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentsReport {
    pub gamma: f64,
    pub model: CoarseGrainModel,
    pub field: CurrentField,
    /// Surrogate quantile of the largest absolute pair current.
    pub current_floor: f64,
    /// Surrogate quantile of the larger absolute lobe circulation.
    pub circulation_floor: f64,
    /// Circulation below and above the diagonal.
    pub lobes: (f64, f64),
    pub modes: usize,
    pub scan: Vec<FieldSample>,
}

impl CurrentsReport {
    pub fn summary(&self) -> Value {
        serde_json::json!({
            "gamma": self.gamma,
            "lag": self.model.lag,
            "max_abs_current": self.field.max_abs(),
            "current_floor": self.current_floor,
            "circulation_below_diagonal": self.lobes.0,
            "circulation_above_diagonal": self.lobes.1,
            "circulation_floor": self.circulation_floor,
            "occupation_modes": self.modes,
            "out_of_bounds_fraction": self.model.out_of_bounds_fraction(),
        })
    }
}

pub fn run_currents(scenario: &Scenario, gamma: f64, grid: GridSpec) -> Result<CurrentsReport> {
    scenario.validate()?;
    let settings = &scenario.currents;
    let trajectories = scenario.simulate(gamma)?;
    let (paths, lag) = thinned_paths(&trajectories, settings.lag_time);
    let cells = CellPaths::from_points(&paths, grid, lag)?;
    let model = cells.fit()?;
    let field = model.currents();
    let lobes = field.lobe_circulations(&model.occupation);
    let block = ((settings.block_time / lag).round() as usize).max(1);
    let null = cells.block_reversal_surrogates(settings.n_surrogates, block, scenario.seed, |m| {
        let f = m.currents();
        let (below, above) = f.lobe_circulations(&m.occupation);
        (f.max_abs(), below.abs().max(above.abs()))
    })?;
    let current_floor = quantile(&null.iter().map(|n| n.0).collect::<Vec<_>>(), settings.floor_quantile);
    let circulation_floor = quantile(&null.iter().map(|n| n.1).collect::<Vec<_>>(), settings.floor_quantile);
    let modes = model.occupation_components(settings.mode_fraction);
    let scan = field_scan(
        &scenario.config,
        &scenario.params_at(gamma),
        [grid.x_min, grid.x_max, grid.y_min, grid.y_max],
        settings.scan_points,
    );
    Ok(CurrentsReport {
        gamma,
        model,
        field,
        current_floor,
        circulation_floor,
        lobes,
        modes,
        scan,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    /// Empirical probability of the bin.
    pub empirical: f64,
    /// Analytic probability of the bin.
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdfCheck {
    pub gamma: f64,
    pub analytic: DeltaBeliefModel,
    pub histogram: Vec<HistogramBin>,
    /// Empirical mass outside the histogram range.
    pub out_of_range: f64,
    pub tv_distance: f64,
    pub analytic_mean: f64,
    pub empirical_mean: f64,
    /// Across-trajectory standard error of the empirical mean.
    pub empirical_mean_se: f64,
    pub n_samples: usize,
}

impl PdfCheck {
    pub fn summary(&self) -> Value {
        serde_json::json!({
            "gamma": self.gamma,
            "tv_distance": self.tv_distance,
            "analytic_mean": self.analytic_mean,
            "empirical_mean": self.empirical_mean,
            "empirical_mean_se": self.empirical_mean_se,
            "out_of_range": self.out_of_range,
            "n_samples": self.n_samples,
        })
    }

    /// CSV `bin_lo,bin_hi,center,empirical_density,analytic_density`.
    pub fn write_histogram_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bin_lo", "bin_hi", "center", "empirical_density", "analytic_density"])?;
        for b in &self.histogram {
            let width = b.hi - b.lo;
            w.write_record([
                b.lo.to_string(),
                b.hi.to_string(),
                (0.5 * (b.lo + b.hi)).to_string(),
                (b.empirical / width).to_string(),
                (b.analytic / width).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Histogram of post-burn-in belief differences against the analytic law.
pub fn pdf_check_from(scenario: &Scenario, gamma: f64, trajectories: &[Trajectory]) -> Result<PdfCheck> {
    let settings = &scenario.pdf;
    let analytic = stationary_delta_pdf_with(
        &scenario.config,
        &scenario.params_at(gamma),
        &settings.grid,
        settings.include_subleading,
    )?;
    let (lo, hi, nb) = (settings.grid.lo, settings.grid.hi, settings.n_bins.max(1));
    let width = (hi - lo) / nb as f64;
    let mut counts = vec![0u64; nb];
    let mut outside = 0u64;
    let mut per_traj = Vec::with_capacity(trajectories.len());
    let mut total = 0u64;
    for t in trajectories {
        let mut sum = 0.0;
        let recs = t.stationary();
        for r in recs {
            let d = r.state.delta();
            sum += d;
            total += 1;
            if d >= lo && d < hi {
                counts[(((d - lo) / width) as usize).min(nb - 1)] += 1;
            } else {
                outside += 1;
            }
        }
        per_traj.push(sum / recs.len().max(1) as f64);
    }
    if total == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let histogram: Vec<HistogramBin> = (0..nb)
        .map(|b| {
            let (blo, bhi) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
            HistogramBin {
                lo: blo,
                hi: bhi,
                empirical: counts[b] as f64 / total as f64,
                analytic: analytic.mass_between(blo, bhi),
            }
        })
        .collect();
    let out_of_range = outside as f64 / total as f64;
    let tv_distance = 0.5 * (histogram.iter().map(|b| (b.empirical - b.analytic).abs()).sum::<f64>() + out_of_range);
    let em = mean_se(&per_traj);
    Ok(PdfCheck {
        gamma,
        analytic_mean: analytic.mean(),
        analytic,
        histogram,
        out_of_range,
        tv_distance,
        empirical_mean: em.mean,
        empirical_mean_se: em.std_error,
        n_samples: total as usize,
    })
}

pub fn run_pdf_check(scenario: &Scenario, gamma: f64) -> Result<PdfCheck> {
    scenario.validate()?;
    let trajectories = scenario.simulate(gamma)?;
    pdf_check_from(scenario, gamma, &trajectories)
}

/// Per-trajectory summary CSV
/// `trajectory,mean_r_hat_a,mean_r_hat_b,var_r_hat_a,var_r_hat_b,mean_delta,mean_earned`.
pub fn write_ensemble_summary_csv<W: Write>(trajectories: &[Trajectory], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "trajectory",
        "mean_r_hat_a",
        "mean_r_hat_b",
        "var_r_hat_a",
        "var_r_hat_b",
        "mean_delta",
        "mean_earned",
    ])?;
    for t in trajectories {
        let recs = t.stationary();
        let n = recs.len().max(1) as f64;
        let ma = recs.iter().map(|r| r.state.r_hat_a).sum::<f64>() / n;
        let mb = recs.iter().map(|r| r.state.r_hat_b).sum::<f64>() / n;
        let va = recs.iter().map(|r| (r.state.r_hat_a - ma).powi(2)).sum::<f64>() / n;
        let vb = recs.iter().map(|r| (r.state.r_hat_b - mb).powi(2)).sum::<f64>() / n;
        let md = recs.iter().map(|r| r.state.delta()).sum::<f64>() / n;
        let me = recs.iter().map(|r| r.earned).sum::<f64>() / n;
        w.write_record([
            t.trajectory_index.to_string(),
            ma.to_string(),
            mb.to_string(),
            va.to_string(),
            vb.to_string(),
            md.to_string(),
            me.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
