"""Smoke test for the Python bindings.

Install first:  pip install --no-build-isolation -e crates/python
Run:            python python/smoke_test.py
"""

import csv
import json
import math
import tempfile
from pathlib import Path

import belief_thermo_py as bt


def check(cond, what):
    if not cond:
        raise AssertionError(what)
    print(f"ok  {what}")


def main():
    sym = bt.BanditConfig()
    passive = bt.AgentParams(beta=0.1, gamma=0.0, sigma_eta=0.01)
    exploit = bt.AgentParams(beta=0.1, gamma=2.5, sigma_eta=0.01)

    check(abs(bt.allocation(0.2, 2.0) + bt.allocation(-0.2, 2.0) - 1.0) < 1e-15, "allocation symmetry")

    f = bt.fields(0.25, 0.25, sym, passive)
    check(abs(f["diffusion"][0] - 1.565e-4) < 1e-12, "diffusion at the passive fixed point")
    check(max(abs(v) for v in f["drift"]) < 1e-15, "drift vanishes at the passive fixed point")
    check(abs(bt.fields(0.3, 0.2, sym, passive)["curl"]) < 1e-6, "curl vanishes at Γ=0")
    check(abs(bt.fields(0.3, 0.2, sym, exploit)["curl"]) > 1e-3, "curl witness at Γ=2.5")

    delta, pdf = bt.delta_pdf(sym, bt.AgentParams(gamma=1.5))
    step = delta[1] - delta[0]
    check(abs(sum(pdf) * step - 1.0) < 1e-3, "δ law is normalized")
    check(abs(bt.analytic_mean_reward(sym, bt.AgentParams(gamma=1.5)) - 0.5) < 1e-12, "analytic reward, equal means")

    traj = bt.simulate(sym, exploit, n_steps=2000, seed=4)
    again = bt.simulate(sym, exploit, n_steps=2000, seed=4)
    check(len(traj["r_hat_a"]) == 2000 and traj == again, "simulation is deterministic")
    earned = [ra * a + rb * (1 - a) for ra, rb, a in zip(traj["reward_a"], traj["reward_b"], traj["allocation"])]
    check(all(math.isclose(x, y, rel_tol=0, abs_tol=1e-12) for x, y in zip(earned, traj["earned"])), "earned reward")

    paths = []
    for k in range(8):
        t = bt.simulate(sym, exploit, n_steps=4000, seed=1, trajectory=k)
        paths.append([[a, b] for a, b in zip(t["r_hat_a"][1000:], t["r_hat_b"][1000:])])
    phi, se = bt.phi_monte_carlo(paths, 1.0, sym, exploit)
    check(phi > 0 and se > 0, f"Monte Carlo Φ at Γ=2.5: {phi:.3f} ± {se:.3f}")

    try:
        bt.AgentParams(beta=-1.0)
    except ValueError as e:
        check(json.loads(str(e))["error"] == "invalid_config", "invalid parameters raise ValueError with error JSON")
    else:
        raise AssertionError("negative β accepted")

    with tempfile.TemporaryDirectory() as tmp:
        overrides = json.dumps({"n_trajectories": 20, "n_steps": 3000, "burn_in": 500})
        files = bt.run("pdf-check", tmp, scenario="asym_var", gamma=[2.0], seed=3, overrides=overrides)
        check(len(files) == 4, "run writes two CSVs with sidecars")
        with open(Path(tmp) / "pdf_histogram.csv") as fh:
            header = next(csv.reader(fh))
        check(header == ["bin_lo", "bin_hi", "center", "empirical_density", "analytic_density"], "histogram header")
        side = json.loads((Path(tmp) / "pdf_histogram.json").read_text())
        check(side["scenario"]["seed"] == 3 and side["results"]["tv_distance"] < 0.2, "sidecar holds the scenario")

    print("smoke test passed")


if __name__ == "__main__":
    main()
