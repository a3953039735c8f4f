import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from vstab import io
from vstab.cli import main
from vstab.models import ModelSpec

SMALL_CONFIG = """
[model]
variant = "nonlinear"
b = { kind = "linear", params = [-0.5] }
sigma = 1.0
h = { kind = "identity" }

[weight]
family = "exp_abs"
c = 1.0

[grid]
L = 12.0
points = 400

[experiment]
n = 40
seeds = [3, 1]
burn = 5
ybar_sd = 3.0
init = { mean = 0.0, var = 1.0 }
init_tilde = { mean = 3.0, var = 2.0 }
"""


@pytest.fixture
def model_file(tmp_path):
    p = tmp_path / "model.json"
    p.write_text(json.dumps(ModelSpec.linear(0.5).to_dict()))
    return p


def test_simulate_is_bit_identical(tmp_path, model_file):
    for name in ("a.csv", "b.csv"):
        assert main(["simulate", "--model", str(model_file), "--n", "30", "--seed", "9",
                     "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    obs = io.read_observations(tmp_path / "a.csv")
    assert obs.seed == 9 and obs.origin == "simulated" and len(obs) == 30
    assert obs.model == ModelSpec.linear(0.5).to_dict()


def test_observation_roundtrip_is_exact(tmp_path):
    from vstab.models import ObservationPath
    y = np.random.default_rng(0).standard_normal(50) * 1e3
    io.write_observations(tmp_path / "y.csv", ObservationPath(y))
    back = io.read_observations(tmp_path / "y.csv")
    assert np.array_equal(back.y, y) and back.origin == "external"


def test_filter_subcommand(tmp_path, model_file):
    main(["simulate", "--model", str(model_file), "--n", "10", "--seed", "1", "--out", str(tmp_path / "y.csv")])
    assert main(["filter", "--scenario", "prediction", "--model", str(model_file),
                 "--init", "gaussian:0,1", "--obs", str(tmp_path / "y.csv"),
                 "--out", str(tmp_path / "f.csv"), "--weight", "exp_abs:0.5",
                 "--points", "500"]) == 0
    rows = list(csv.reader(open(tmp_path / "f.csv")))
    assert rows[0] == ["k", "lambda_k", "v_moment_k", "tail_diag_k"] and len(rows) == 11


def test_stability_subcommand(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(SMALL_CONFIG)
    for out in ("r1", "r2"):
        assert main(["stability", "--config", str(cfg), "--out-dir", str(tmp_path / out)]) == 0
    summary = json.loads((tmp_path / "r1" / "summary.json").read_text())
    assert [s["seed"] for s in summary["seeds"]] == [1, 3]
    for s in summary["seeds"]:
        assert s["rate_fit"]["slope"] < 0 and s["rho_kind"] == "plug-in"
        assert s["forget_bound_holds"] and s["echeck_bound_holds"]
        assert {"gamma_minus", "gamma_plus", "beta", "d", "rho"} <= set(s["constants"])
    header = (tmp_path / "r1" / "seed-1" / "trace.csv").read_text().splitlines()[0]
    assert header == "n,gap_v,bound_forget,vmom,vmom_tilde,bound_echeck,lambda,lambda_tilde,i_count"
    for seed in (1, 3):
        a = (tmp_path / "r1" / f"seed-{seed}" / "trace.csv").read_bytes()
        b = (tmp_path / "r2" / f"seed-{seed}" / "trace.csv").read_bytes()
        assert a == b


def test_check_assumptions_subcommand(tmp_path):
    m = tmp_path / "m.toml"
    m.write_text(SMALL_CONFIG)
    out = tmp_path / "rep.json"
    assert main(["check-assumptions", "--model", str(m), "--ybar", "4.5", "--c", "1.0",
                 "--out", str(out), "--n", "100", "--points", "400", "--L", "12"]) == 0
    rep = json.loads(out.read_text())
    assert rep["E_conditions"]["pass"]
    assert {"d_under", "D", "M_const"} <= set(rep["drift"])
    assert {"eps_minus_tilde", "eps_plus_tilde", "rho_Cd"} <= set(rep["ld_D"])
    assert {"l_hat", "gamma_hat"} <= set(rep["env"])
    assert all(rep["theorem_constants"]["checks"].values())


def test_check_assumptions_reports_bad_kappa(tmp_path):
    m = tmp_path / "m.json"
    m.write_text(json.dumps(ModelSpec.linear(0.9).to_dict()))
    out = tmp_path / "rep.json"
    main(["check-assumptions", "--model", str(m), "--ybar", "3", "--c", "1.99", "--out", str(out)])
    rep = json.loads(out.read_text())
    assert rep["kappa"] < 0 and "admissible" in rep["drift_error"]


def test_divergence_subcommand():
    res = subprocess.run([sys.executable, "-m", "vstab", "divergence", "--alpha", "0.5", "--c", "1.5",
                          "--rmax", "10"], capture_output=True, text=True, check=True)
    lines = res.stdout.splitlines()
    assert lines[0] == "# kappa=5"
    assert "closed_form_v_moment=inf" in res.stdout
    vals = [float(l.split(",")[1]) for l in lines if l and l[0].isdigit()]
    assert len(vals) == 10 and vals[-1] > 1e8 and all(np.diff(vals) > 0)


def test_json_floats_have_17_digits():
    text = io.dumps_json({"x": 0.1, "y": [1.0 / 3.0, float("inf")], "ok": True, "n": 3})
    data = json.loads(text)
    assert data["x"] == 0.1 and data["y"][0] == 1.0 / 3.0 and data["y"][1] == float("inf")
    assert "0.33333333333333331" in text
