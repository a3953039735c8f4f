"""Command line entry point: ``python -m vstab <subcommand> ...``."""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .assumptions import (check_E_conditions, drift_profile, env_stats, kappa,
                          ld_constants, theorem_constants)
from .engine import run
from .exceptions import DomainError, GammaTooSmall
from .experiments import (initial_law, observation_sd, prediction_vnorm_divergence,
                          rate_estimate, rho_scaled_decreasing, run_seeds)
from .gaussian import GaussianState, gaussian_v_moment
from .measure import Grid, WeightSpec
from .models import Scenario, simulate


def _cmd_simulate(a):
    model = io.load_model(a.model)
    _, obs = simulate(model, a.n, a.seed, burn_in=a.burn_in)
    io.write_observations(a.out, obs)
    return 0


def _cmd_filter(a):
    model = io.load_model(a.model)
    obs = io.read_observations(a.obs)
    grid = Grid.symmetric(a.L, a.points)
    lam0 = io.parse_init(a.init, grid)
    fr = run(model, Scenario(a.scenario), lam0, obs, io.parse_weight(a.weight))
    fr.to_csv(a.out, density_sidecar=a.densities)
    return 0


def load_experiment(config: dict):
    """Unpack a stability config into the arguments of run_seeds plus bookkeeping."""
    from .models import ModelSpec

    model = ModelSpec.from_dict(config["model"])
    v = WeightSpec.from_dict(config["weight"])
    g = config["grid"]
    grid = Grid.symmetric(float(g["L"]), int(g["points"]))
    ex = config["experiment"]
    seeds = ex.get("seeds", 10)
    seeds = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
    if "ybar" in ex:
        ybar = float(ex["ybar"])
    else:
        ybar = float(ex.get("ybar_sd", 3.0)) * observation_sd(model)
    return {
        "model": model, "v": v, "grid": grid, "seeds": seeds, "ybar": ybar,
        "n": int(ex.get("n", 200)), "burn": int(ex.get("burn", 20)),
        "scenario": Scenario(ex.get("scenario", "filter")),
        "lam0": initial_law(grid, ex["init"]), "lam0_tilde": initial_law(grid, ex["init_tilde"]),
        "d": ex.get("d"),
    }


def _cmd_stability(a):
    cfg = load_experiment(io.load_toml(a.config))
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traces = run_seeds(cfg["model"], cfg["scenario"], cfg["lam0"], cfg["lam0_tilde"], cfg["n"],
                       cfg["seeds"], cfg["v"], cfg["ybar"], cfg["d"], workers=a.workers)
    per_seed = []
    for tr in traces:
        sub = out / f"seed-{tr.seed}"
        sub.mkdir(exist_ok=True)
        tr.to_csv(sub / "trace.csv")
        fit = rate_estimate(tr, cfg["burn"], cfg["n"])
        entry = tr.summary()
        entry["rate_fit"] = {"slope": fit.slope, "r2": fit.r2, "rho_hat": fit.rho_hat,
                             "points": fit.points, "window": [cfg["burn"], cfg["n"]]}
        entry["rho_scaled_decreasing"] = rho_scaled_decreasing(tr)
        q = tr.qualifies
        entry["forget_bound_holds"] = bool(np.all(tr.log_gap[q] <= tr.log_bound_forget[q] + math.log1p(1e-6)))
        entry["echeck_bound_holds"] = bool(np.all(tr.log_vmom[1:] <= tr.log_bound_echeck[1:] + math.log1p(1e-6)))
        per_seed.append(entry)
    io.write_json(out / "summary.json", {
        "config": str(a.config), "model": cfg["model"].to_dict(), "weight": cfg["v"].to_dict(),
        "grid": {"L": cfg["grid"].hi, "points": cfg["grid"].points}, "ybar": cfg["ybar"],
        "upsilon_kind": "window", "seeds": per_seed,
    })
    return 0


def check_assumptions_report(model, ybar: float, c: float, family: str | None = None,
                             n: int = 500, seed: int = 0, L: float = 20.0,
                             points: int = 1500) -> dict:
    family = family or ("exp_square" if model.is_linear else "exp_abs")
    v = WeightSpec(family, c)
    report = {"model": model.to_dict(), "weight": v.to_dict(), "ybar": [-ybar, ybar]}
    if not model.is_linear:
        report["E_conditions"] = check_E_conditions(model)
    if model.is_linear and family == "exp_square":
        report["kappa"] = kappa(model.alpha, c, model.beta_obs)
    try:
        prof = drift_profile(model, v, ybar)
    except DomainError as exc:
        report["drift_error"] = str(exc)
        return report
    report["drift"] = prof.to_dict()
    report["ld_D"] = ld_constants(model, prof.D, prof.K_set).to_dict()
    _, path = simulate(model, n + 1, seed)
    env = env_stats(model, Scenario.FILTER, path, v, prof, prof.d_under, Grid.symmetric(L, points), n=n)
    report["env"] = {"l_hat": env.l_hat, "gamma_hat": env.gamma_hat, "n": n, "seed": seed,
                     "upsilon_kind": "window"}
    try:
        tc = theorem_constants(env.l_hat, env.gamma_hat,
                               lambda d: ld_constants(model, prof.C_of(d), prof.K_set), prof.d_under)
        report["theorem_constants"] = tc.to_dict() | {"rho_kind": "plug-in", "checks": tc.check()}
    except GammaTooSmall as exc:
        report["theorem_constants_error"] = str(exc)
    return report


def _cmd_check(a):
    model = io.load_model(a.model)
    report = check_assumptions_report(model, a.ybar, a.c, a.family, a.n, a.seed, a.L, a.points)
    io.write_json(a.out, report)
    return 0


def _cmd_divergence(a):
    radii = np.linspace(a.rmax / a.steps, a.rmax, a.steps)
    vals = prediction_vnorm_divergence(a.alpha, a.c, radii, a.x)
    var = 1.0 / (1.0 - a.alpha ** 2)
    out = sys.stdout
    out.write(f"# kappa={io.fmt(kappa(a.alpha, a.c))}\n")
    out.write(f"# c*stationary_var={io.fmt(a.c * var)}\n")
    mom = gaussian_v_moment(GaussianState(0.0, var), WeightSpec("exp_square", a.c))
    out.write(f"# closed_form_v_moment={io.fmt(mom)}\n")
    out.write("R,integral\n")
    for r, val in zip(radii, vals):
        out.write(f"{io.fmt(r)},{io.fmt(val)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vstab", description="V-norm filter stability experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate an observation path")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--burn-in", type=int, default=10_000)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("filter", help="run the grid filter on an observation file")
    s.add_argument("--scenario", choices=[e.value for e in Scenario], required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--init", required=True, help="gaussian:MEAN,VAR")
    s.add_argument("--obs", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--weight", default=None, help="FAMILY:C, e.g. exp_abs:1.0")
    s.add_argument("--L", type=float, default=12.0)
    s.add_argument("--points", type=int, default=2000)
    s.add_argument("--densities", default=None, help="optional .npy sidecar for the densities")
    s.set_defaults(func=_cmd_filter)

    s = sub.add_parser("stability", help="two-filter forgetting experiment from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=_cmd_stability)

    s = sub.add_parser("check-assumptions", help="numerical report on the stability hypotheses")
    s.add_argument("--model", required=True)
    s.add_argument("--ybar", type=float, required=True, help="half-width of the observation set")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--family", choices=["exp_abs", "exp_square"], default=None)
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--L", type=float, default=20.0)
    s.add_argument("--points", type=int, default=1500)
    s.set_defaults(func=_cmd_check)

    s = sub.add_parser("divergence", help="truncated V-integrals of a prediction law")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--rmax", type=float, required=True)
    s.add_argument("--steps", type=int, default=10)
    s.add_argument("--x", type=float, default=0.0)
    s.set_defaults(func=_cmd_divergence)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)
