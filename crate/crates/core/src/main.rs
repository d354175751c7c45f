use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use belief_thermo::experiments::commands::{error_json, execute, Command, Invocation};
use belief_thermo::experiments::ScenarioName;
use belief_thermo::Error;

#[derive(Parser)]
#[command(name = "belief-thermo", version, about = "Bandit belief dynamics: simulation, currents and irreversibility")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate an ensemble and export the first trajectory and a summary.
    Simulate(Common),
    /// Γ sweep: belief gap, excess reward and Φ estimates.
    Sweep(Common),
    /// Coarse-grained occupation, currents and field scan.
    Currents(Common),
    /// Analytic vs empirical law of the belief difference.
    PdfCheck(Common),
    /// All Φ estimators at one Γ.
    Phi(Common),
}

#[derive(Args)]
struct Common {
    /// symmetric, asym_mean, asym_var or custom.
    #[arg(long)]
    scenario: Option<String>,
    /// Exploitation parameter; a comma-separated list replaces the sweep grid.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// JSON file with scenario fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma_eta: Option<f64>,
    #[arg(long)]
    n_trajectories: Option<usize>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
}

fn invocation(cli: Cli) -> Result<Invocation, Error> {
    let (command, c) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Currents(c) => (Command::Currents, c),
        Cmd::PdfCheck(c) => (Command::PdfCheck, c),
        Cmd::Phi(c) => (Command::Phi, c),
    };
    let scenario = c.scenario.as_deref().map(str::parse::<ScenarioName>).transpose()?;
    let mut overrides = json!({});
    let mut params = serde_json::Map::new();
    if let Some(b) = c.beta {
        params.insert("beta".into(), json!(b));
    }
    if let Some(s) = c.sigma_eta {
        params.insert("sigma_eta".into(), json!(s));
    }
    if !params.is_empty() {
        overrides["params"] = Value::Object(params);
    }
    for (key, v) in [
        ("n_trajectories", c.n_trajectories.map(|v| json!(v))),
        ("n_steps", c.n_steps.map(|v| json!(v))),
        ("burn_in", c.burn_in.map(|v| json!(v))),
        ("dt", c.dt.map(|v| json!(v))),
        ("stride", c.stride.map(|v| json!(v))),
    ] {
        if let Some(v) = v {
            overrides[key] = v;
        }
    }
    Ok(Invocation {
        command,
        scenario,
        gamma: c.gamma,
        config: c.config,
        seed: c.seed,
        out: c.out,
        overrides,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string() }));
            return ExitCode::from(2);
        }
    };
    match invocation(cli).and_then(|inv| execute(&inv)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
