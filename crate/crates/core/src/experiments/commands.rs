//! Command execution behind the CLI: resolve the scenario, run, and write
//! each CSV next to a JSON sidecar holding the resolved configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::{
    estimate_phi, run_currents, run_pdf_check, run_sweep, write_ensemble_summary_csv, write_sweep_csv, Scenario,
    ScenarioName,
};
use crate::error::{Error, Result};
use crate::fokker_planck::write_field_scan_csv;
use crate::irreversibility::write_estimates_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    Currents,
    PdfCheck,
    Phi,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Currents => "currents",
            Command::PdfCheck => "pdf-check",
            Command::Phi => "phi",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub scenario: Option<ScenarioName>,
    /// One value for single-Γ commands; replaces the grid for `sweep`.
    pub gamma: Vec<f64>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Extra scenario fields, merged last.
    pub overrides: Value,
}

impl Invocation {
    pub fn scenario(&self) -> Result<Scenario> {
        let file = match &self.config {
            Some(p) => Some(serde_json::from_str::<Value>(&fs::read_to_string(p)?)?),
            None => None,
        };
        let mut overrides = match &self.overrides {
            Value::Null => json!({}),
            v => v.clone(),
        };
        if let Some(seed) = self.seed {
            overrides["seed"] = json!(seed);
        }
        if self.command == Command::Sweep && !self.gamma.is_empty() {
            overrides["gamma_grid"] = json!(self.gamma);
        }
        Scenario::resolve(self.scenario, file.as_ref(), &overrides)
    }

    fn single_gamma(&self) -> Result<f64> {
        match self.gamma.as_slice() {
            [g] if g.is_finite() && *g >= 0.0 => Ok(*g),
            [] => Err(Error::InvalidConfig(format!("{} needs --gamma", self.command.as_str()))),
            _ => Err(Error::InvalidConfig(format!(
                "{} takes one finite, non-negative --gamma",
                self.command.as_str()
            ))),
        }
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    command: Command,
    scenario: &'a Scenario,
    written: Vec<PathBuf>,
}

impl Outputs<'_> {
    /// Writes `name` and `name` with a `.json` extension.
    fn write(&mut self, name: &str, results: Value, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        body(&mut buf)?;
        let path = self.dir.join(name);
        fs::write(&path, &buf)?;
        let sidecar = json!({
            "file": name,
            "command": self.command.as_str(),
            "version": env!("CARGO_PKG_VERSION"),
            "scenario": self.scenario,
            "results": results,
        });
        let side = path.with_extension("json");
        fs::write(&side, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        self.written.push(path);
        self.written.push(side);
        Ok(())
    }
}

/// Runs the command and returns the files written.
pub fn execute(inv: &Invocation) -> Result<Vec<PathBuf>> {
    let scenario = inv.scenario()?;
    fs::create_dir_all(&inv.out)?;
    let mut out = Outputs {
        dir: &inv.out,
        command: inv.command,
        scenario: &scenario,
        written: Vec::new(),
    };
    match inv.command {
        Command::Simulate => {
            let gamma = inv.single_gamma()?;
            let trajectories = scenario.simulate(gamma)?;
            let meta = json!({ "gamma": gamma, "n_trajectories": trajectories.len() });
            out.write("trajectory_0.csv", meta.clone(), |w| trajectories[0].write_csv(w))?;
            out.write("ensemble_summary.csv", meta, |w| write_ensemble_summary_csv(&trajectories, w))?;
        }
        Command::Sweep => {
            let rows = run_sweep(&scenario)?;
            let flags: Vec<Value> = rows
                .iter()
                .flat_map(|r| r.phi.estimates.iter())
                .filter(|e| e.is_flagged())
                .map(|e| json!({ "gamma": e.metadata.get("gamma"), "estimator": e.estimator, "flags": e.flags }))
                .collect();
            let meta = json!({
                "gamma_grid_is_default": scenario.gamma_grid == super::DEFAULT_GAMMA_GRID,
                "flags": flags,
                "errors": rows.iter().map(|r| json!({ "gamma": r.gamma, "errors": r.errors })).collect::<Vec<_>>(),
            });
            out.write("sweep.csv", meta, |w| write_sweep_csv(&rows, w))?;
            let long: Vec<_> = rows
                .iter()
                .flat_map(|r| r.phi.estimates.iter().map(move |e| (r.gamma, e.clone())))
                .collect();
            let settings: Vec<_> = long.iter().map(|(_, e)| e).collect();
            out.write("phi.csv", json!({ "estimates": settings }), |w| write_estimates_csv(&long, w))?;
        }
        Command::Currents => {
            let gamma = inv.single_gamma()?;
            let report = run_currents(&scenario, gamma, scenario.currents.grid)?;
            let summary = report.summary();
            out.write("occupation.csv", summary.clone(), |w| report.model.write_occupation_csv(w))?;
            out.write("currents.csv", summary.clone(), |w| {
                report.field.write_csv(w, Some(report.current_floor))
            })?;
            out.write("fields.csv", summary, |w| write_field_scan_csv(&report.scan, w))?;
        }
        Command::PdfCheck => {
            let gamma = inv.single_gamma()?;
            let check = run_pdf_check(&scenario, gamma)?;
            let summary = check.summary();
            out.write("pdf_analytic.csv", summary.clone(), |w| check.analytic.write_csv(w))?;
            out.write("pdf_histogram.csv", summary, |w| check.write_histogram_csv(w))?;
        }
        Command::Phi => {
            let gamma = inv.single_gamma()?;
            let trajectories = scenario.simulate(gamma)?;
            let run = estimate_phi(&scenario, gamma, &trajectories);
            let rows: Vec<_> = run.estimates.iter().map(|e| (gamma, e.clone())).collect();
            let meta = json!({
                "estimates": run.estimates,
                "errors": run.errors.iter().map(|(e, m)| json!({ "estimator": e, "error": m })).collect::<Vec<_>>(),
            });
            out.write("phi.csv", meta, |w| write_estimates_csv(&rows, w))?;
        }
    }
    Ok(out.written)
}

/// Machine-readable failure report printed by the CLI.
pub fn error_json(err: &Error) -> Value {
    json!({ "error": err.kind(), "message": err.to_string() })
}
