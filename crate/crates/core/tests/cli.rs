use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_belief-thermo");

/// Small enough for a test run, large enough for the learned estimators.
const SMALL: &str = r#"{
    "n_trajectories": 12,
    "n_steps": 2000,
    "burn_in": 200,
    "gamma_grid": [0.0, 2.5],
    "estimators": {
        "max_pairs": 12000,
        "n_bootstrap": 10,
        "neural_settings": { "hidden": [16, 16], "max_epochs": 3, "n_bootstrap": 10 },
        "classifier_settings": { "n_bootstrap": 10, "boosting": { "n_rounds": 20 } },
        "monte_carlo_settings": { "n_bootstrap": 10 }
    },
    "currents": { "n_surrogates": 10, "scan_points": 5 },
    "pdf": { "n_bins": 20 }
}"#;

fn run(args: &[&str], dir: &Path, threads: usize) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.json"), SMALL).unwrap();
    dir
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn every_command_writes_csvs_with_sidecars() {
    let dir = setup();
    let cases: [(&str, &[&str]); 5] = [
        ("simulate", &["trajectory_0.csv", "ensemble_summary.csv"]),
        ("sweep", &["sweep.csv", "phi.csv"]),
        ("currents", &["occupation.csv", "currents.csv", "fields.csv"]),
        ("pdf-check", &["pdf_analytic.csv", "pdf_histogram.csv"]),
        ("phi", &["phi.csv"]),
    ];
    for (cmd, files) in cases {
        let out_dir = format!("out_{cmd}");
        let out = run(&[cmd, "--config", "small.json", "--gamma", "2.5", "--seed", "3", "--out", &out_dir], dir.path(), 2);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        for f in files {
            let csv = dir.path().join(&out_dir).join(f);
            assert!(csv.exists(), "{cmd}: missing {f}");
            let side: Value = serde_json::from_str(&fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
            assert_eq!(side["file"], *f);
            assert_eq!(side["command"], cmd);
            assert_eq!(side["scenario"]["seed"], 3);
            assert_eq!(side["scenario"]["n_trajectories"], 12);
        }
    }
    let d = dir.path();
    assert_eq!(
        header(&d.join("out_simulate/trajectory_0.csv")),
        "t,r_hat_a,r_hat_b,allocation,reward_a,reward_b,earned"
    );
    assert_eq!(header(&d.join("out_currents/occupation.csv")), "cell_x,cell_y,prob");
    assert_eq!(header(&d.join("out_currents/currents.csv")), "from_x,from_y,to_x,to_y,J,noise_floor");
    assert_eq!(header(&d.join("out_currents/fields.csv")), "x,y,F_x,F_y,D_xx,D_yy,force_x,force_y,curl");
    assert_eq!(header(&d.join("out_pdf-check/pdf_analytic.csv")), "delta,force,potential,pdf");
    assert_eq!(
        header(&d.join("out_pdf-check/pdf_histogram.csv")),
        "bin_lo,bin_hi,center,empirical_density,analytic_density"
    );
    assert_eq!(header(&d.join("out_phi/phi.csv")), "gamma,estimator,phi,std_error,n_samples");
    let sweep = header(&d.join("out_sweep/sweep.csv"));
    for col in ["gamma", "mean_abs_delta", "excess_reward", "analytic_reward", "phi_mc", "phi_nn", "phi_gbt"] {
        assert!(sweep.split(',').any(|c| c == col), "sweep header lacks {col}: {sweep}");
    }
    // --gamma on sweep replaces the grid.
    assert_eq!(fs::read_to_string(d.join("out_sweep/sweep.csv")).unwrap().lines().count(), 2);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = setup();
    let args = |out: &'static str| ["sweep", "--config", "small.json", "--seed", "11", "--out", out];
    for (out, threads) in [("a", 1), ("b", 4), ("c", 4)] {
        let o = run(&args(out), dir.path(), threads);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["sweep.csv", "sweep.json", "phi.csv", "phi.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}: 1 vs 4 threads");
        assert_eq!(a, fs::read(dir.path().join("c").join(f)).unwrap(), "{f}: repeated run");
    }
}

#[test]
fn seed_changes_the_output() {
    let dir = setup();
    for (seed, out) in [("1", "s1"), ("2", "s2")] {
        let o = run(&["simulate", "--config", "small.json", "--gamma", "1", "--seed", seed, "--out", out], dir.path(), 2);
        assert!(o.status.success());
    }
    let a = fs::read(dir.path().join("s1/trajectory_0.csv")).unwrap();
    let b = fs::read(dir.path().join("s2/trajectory_0.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn failures_report_json_and_nonzero_status() {
    let dir = setup();
    fs::write(dir.path().join("bad.json"), r#"{ "n_trajectories": 4, "n_steps": 100, "burn_in": 200 }"#).unwrap();
    fs::write(dir.path().join("typo.json"), r#"{ "n_trajectorys": 4 }"#).unwrap();
    fs::write(dir.path().join("garbled.json"), "{ not json").unwrap();
    let cases: [(&[&str], &str); 6] = [
        (&["simulate", "--scenario", "nonesuch", "--gamma", "1"], "invalid_config"),
        (&["simulate", "--config", "bad.json", "--gamma", "1"], "invalid_config"),
        (&["simulate", "--config", "typo.json", "--gamma", "1"], "invalid_config"),
        (&["simulate", "--config", "garbled.json", "--gamma", "1"], "json"),
        (&["simulate", "--config", "missing.json", "--gamma", "1"], "io"),
        (&["phi", "--config", "small.json"], "invalid_config"),
    ];
    for (args, kind) in cases {
        let out = run(args, dir.path(), 1);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = stderr_json(&out);
        assert_eq!(err["error"], kind, "{args:?}: {err}");
        assert!(err["message"].as_str().is_some_and(|m| !m.is_empty()));
    }

    let out = run(&["simulate", "--gamma", "abc"], dir.path(), 1);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
    let out = run(&["frobnicate"], dir.path(), 1);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = setup();
    let o = run(
        &["simulate", "--config", "small.json", "--gamma", "0", "--beta", "0.05", "--n-trajectories", "3", "--out", "o"],
        dir.path(),
        1,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let side: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/ensemble_summary.json")).unwrap()).unwrap();
    assert_eq!(side["scenario"]["params"]["beta"], 0.05);
    assert_eq!(side["scenario"]["n_trajectories"], 3);
    assert_eq!(side["scenario"]["n_steps"], 2000);
}
