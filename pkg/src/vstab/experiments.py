"""Stability experiments: two filters from different initial laws along one path.

The distance between the two normalized flows is propagated by an exact
difference recursion (see :func:`vstab.engine.log_difference_vnorms`), so
gaps far below double-precision resolution of the filters themselves are
still measured accurately and reported in log form.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats
from scipy.special import logsumexp

from .assumptions import (DriftProfile, EnvStats, TheoremConstants, drift_profile,
                          env_stats, ld_constants, theorem_constants)
from .engine import StepKernel, grid_of, log_difference_vnorms, run
from .exceptions import DegenerateFit, DomainError, GammaTooSmall
from .measure import GridMeasure, WeightSpec, grid_gaussian, log_vnorm
from .models import ModelSpec, Scenario, simulate

TRACE_COLUMNS = ["n", "gap_v", "bound_forget", "vmom", "vmom_tilde", "bound_echeck",
                 "lambda", "lambda_tilde", "i_count"]


def observation_sd(model: ModelSpec, n: int = 100_000, seed: int = 12345) -> float:
    """Stationary standard deviation of Y: closed form for the linear model, Monte Carlo otherwise."""
    if model.is_linear:
        return math.sqrt(1.0 / (1.0 - model.alpha ** 2) + model.beta_obs ** 2)
    _, path = simulate(model, n, seed)
    return float(np.std(path.y))


@dataclass(eq=False)
class StabilityTrace:
    """Per-n record of one two-filter experiment (n = 0..N).

    Every positive quantity is stored in log form; the properties return
    the plain values (which may overflow to inf or underflow to 0).
    """

    seed: int
    scenario: Scenario
    log_gap: np.ndarray
    log_vmom: np.ndarray
    log_vmom_tilde: np.ndarray
    log_bound_forget: np.ndarray
    log_bound_echeck: np.ndarray
    log_bound_echeck_tilde: np.ndarray
    lambdas: np.ndarray
    lambdas_tilde: np.ndarray
    i_count: np.ndarray
    qualifies: np.ndarray
    constants: TheoremConstants
    env: EnvStats = field(repr=False)
    profile: DriftProfile = field(repr=False)
    rho_Cd_log1m: float = 0.0
    tail_max: float = 0.0
    floor: float = 0.0
    log_nu_ratio: float = 0.0
    log_nut_ratio: float = 0.0
    cum_logZ: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.log_gap.size)

    def _exp(self, a):
        with np.errstate(over="ignore"):
            return np.exp(a)

    @property
    def gap_v(self):
        return self._exp(self.log_gap)

    @property
    def vmom(self):
        return self._exp(self.log_vmom)

    @property
    def vmom_tilde(self):
        return self._exp(self.log_vmom_tilde)

    @property
    def bound_forget(self):
        return self._exp(self.log_bound_forget)

    @property
    def bound_echeck(self):
        return self._exp(self.log_bound_echeck)

    @property
    def bound_echeck_tilde(self):
        return self._exp(self.log_bound_echeck_tilde)

    def lambda_column(self, tilde: bool = False) -> np.ndarray:
        """lambda_{n-1} at row n (NaN at n = 0)."""
        lam = self.lambdas_tilde if tilde else self.lambdas
        return np.concatenate([[np.nan], lam])

    def to_csv(self, path):
        cols = [self.n, self.gap_v, self.bound_forget, self.vmom, self.vmom_tilde,
                self.bound_echeck, self.lambda_column(), self.lambda_column(True), self.i_count]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for row in zip(*cols):
                w.writerow([int(row[0])] + [_fmt(x) for x in row[1:-1]] + [int(row[-1])])

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "scenario": self.scenario.value,
            "constants": self.constants.to_dict(),
            "rho_kind": "plug-in",
            "env": self.env.to_dict(),
            "drift": self.profile.to_dict(),
            "tail_diag_max": self.tail_max,
        }


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _log_forget_bound(log_vm, log_vmt, log_ratio_nu, log_ratio_nut, n, constants: TheoremConstants,
                      rho_log1m, d, cum_logZ):
    """log of the forgetting bound at step n."""
    k1 = math.floor(n * (constants.beta - constants.gamma_minus))
    k2 = math.floor(n * (constants.gamma_plus - constants.beta))
    log_rho_cd = math.log1p(-math.exp(rho_log1m)) if rho_log1m < 0 else -math.inf
    first = math.log(2.0) + log_vm + log_vmt + (k1 * log_rho_cd if k1 > 0 else 0.0)
    second = (math.log(2.0) + log_ratio_nu + log_ratio_nut - d * k2 / 2.0 + 2.0 * cum_logZ[n])
    return float(np.logaddexp(first, second))


def forget_bound(trace: StabilityTrace, n: int, d: float | None = None,
                 constants: TheoremConstants | None = None, log: bool = False) -> float:
    """Forgetting bound at step n, re-evaluated for another level d or constants if given."""
    constants = trace.constants if constants is None else constants
    d = constants.d if d is None else d
    rho_log1m = trace.rho_Cd_log1m if d == constants.d else \
        ld_constants(trace.profile.model, trace.profile.C_of(d), trace.profile.K_set).log_one_minus_rho_Cd
    out = _log_forget_bound(trace.log_vmom[n], trace.log_vmom_tilde[n], trace.log_nu_ratio,
                            trace.log_nut_ratio, n, constants, rho_log1m, d, trace.cum_logZ)
    return out if log else math.exp(out)


def _log_echeck_bound(log_nu_ratio, log_Vd, d, in_K, log_Z, log_T):
    """log of the V-moment bound for n = 0..N (NaN at n = 0)."""
    N = log_Z.size
    cumI = np.concatenate([[0.0], np.cumsum(in_K)])
    cumZ = np.concatenate([[0.0], np.cumsum(log_Z)])
    out = np.full(N + 1, np.nan)
    for n in range(1, N + 1):
        first = log_nu_ratio - d * cumI[n] + cumZ[n]
        k = np.arange(1, n + 1)
        terms = (log_Vd + d - d * (cumI[n] - cumI[k - 1]) - log_T[k - 1]
                 + (cumZ[n] - cumZ[k - 1]))
        out[n] = float(logsumexp(np.concatenate([[first], terms])))
    return out


def echeck_bound(trace: StabilityTrace, n: int, d: float | None = None, tilde: bool = False,
                 log: bool = False) -> float:
    """V-moment bound at step n >= 1, optionally at another level d."""
    if n < 1:
        raise ValueError("the bound is stated for n >= 1")
    d = trace.constants.d if d is None else float(d)
    env = trace.env if d == trace.env.d else trace.env.at_level(trace.profile.model, trace.profile, d)
    ratio = trace.log_nut_ratio if tilde else trace.log_nu_ratio
    out = _log_echeck_bound(ratio, trace.profile.log_V_of(d), d, env.in_K[:n], env.log_Z[:n],
                            env.log_T[:n])[n]
    return out if log else math.exp(out)


def stability_run(model: ModelSpec, scenario: Scenario, lam0: GridMeasure, lam0_tilde: GridMeasure,
                  n: int, seed: int, v: WeightSpec, ybar, d: float | None = None,
                  burn_in: int = 10_000) -> StabilityTrace:
    """Simulate one path and run both flows for n steps, filling the bounds and constants.

    ``ybar`` is the observation interval (or half-width) defining the good
    set K.  With ``d=None`` the level is the one chosen by
    :func:`theorem_constants`; an explicit d must not be below d_under.
    """
    scen = Scenario(scenario)
    if not (lam0.is_probability(1e-9) and lam0_tilde.is_probability(1e-9)):
        raise DomainError("initial laws must be probability measures")
    grid = grid_of(lam0)
    _, path = simulate(model, n + 1, seed, burn_in=burn_in)
    kernel = StepKernel(model, scen, grid)
    ra = run(model, scen, lam0, path, v, n=n, kernel=kernel)
    rb = run(model, scen, lam0_tilde, path, v, n=n, kernel=kernel)
    log_gap = log_difference_vnorms(ra, rb, path, v, kernel)
    log_vm = np.array([log_vnorm(e, v) for e in ra.etas])
    log_vmt = np.array([log_vnorm(e, v) for e in rb.etas])

    profile = drift_profile(model, v, ybar)
    env = env_stats(model, scen, path, v, profile, profile.d_under, grid, n=n, trans=kernel.F)
    try:
        consts = theorem_constants(
            env.l_hat, env.gamma_hat,
            lambda dd: ld_constants(model, profile.C_of(dd), profile.K_set), profile.d_under)
    except GammaTooSmall as exc:
        raise GammaTooSmall(f"seed {seed}: {exc}") from None
    if d is None:
        d = consts.d
    elif d < profile.d_under:
        raise DomainError(f"d = {d} is below d_under = {profile.d_under}")
    env = env.at_level(model, profile, d)
    rho_log1m = ld_constants(model, profile.C_of(d), profile.K_set).log_one_minus_rho_Cd

    Dlo, Dhi = profile.D
    inD = (grid.nodes >= Dlo) & (grid.nodes <= Dhi)
    # nu Q(D) = lambda_0 * eta_1(D)
    log_nu_ratio = log_vm[0] - math.log(ra.lambdas[0] * ra.etas[1].weights[inD].sum())
    log_nut_ratio = log_vmt[0] - math.log(rb.lambdas[0] * rb.etas[1].weights[inD].sum())
    cum_logZ = np.concatenate([[0.0], np.cumsum(env.log_Z)])

    i_count = np.concatenate([[0], np.cumsum(env.in_K)]).astype(int)
    ns = np.arange(n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        qualifies = (ns > 0) & (i_count / np.maximum(ns, 1) >= consts.frequency_threshold)
    log_bf = np.array([_log_forget_bound(log_vm[k], log_vmt[k], log_nu_ratio, log_nut_ratio, k,
                                         consts, rho_log1m, d, cum_logZ) for k in ns])
    log_Vd = profile.log_V_of(d)
    log_be = _log_echeck_bound(log_nu_ratio, log_Vd, d, env.in_K, env.log_Z, env.log_T)
    log_bet = _log_echeck_bound(log_nut_ratio, log_Vd, d, env.in_K, env.log_Z, env.log_T)
    tail = float(max(ra.tail_diag.max(), rb.tail_diag.max()))

    tr = StabilityTrace(int(seed), scen, log_gap, log_vm, log_vmt, log_bf, log_be, log_bet,
                        ra.lambdas, rb.lambdas, i_count, qualifies, consts, env, profile,
                        rho_log1m, tail, 0.0, log_nu_ratio, log_nut_ratio, cum_logZ)
    return tr


@dataclass(frozen=True)
class RateFit:
    slope: float
    r2: float
    rho_hat: float
    points: int

    def __iter__(self):
        return iter((self.slope, self.r2))


def rate_estimate(trace, burn: int = 20, n_max: int | None = None,
                  floor: float | None = None) -> RateFit:
    """Least-squares slope of log gap_V against n over [burn, n_max].

    ``trace`` is a :class:`StabilityTrace` or an array of gaps indexed by n.
    Points with gap below ``floor`` are censored.  The default floor is
    1e-14 for plain arrays (gaps formed by subtraction); traces carry their
    own floor, which is 0 because their gaps come from the difference
    recursion.
    """
    if isinstance(trace, StabilityTrace):
        log_gap = trace.log_gap
        floor = trace.floor if floor is None else floor
    else:
        gap = np.asarray(trace, dtype=float)
        with np.errstate(divide="ignore"):
            log_gap = np.log(gap)
        floor = 1e-14 if floor is None else floor
    ns = np.arange(log_gap.size)
    hi = log_gap.size - 1 if n_max is None else min(int(n_max), log_gap.size - 1)
    log_floor = math.log(floor) if floor > 0 else -math.inf
    use = (ns >= burn) & (ns <= hi) & np.isfinite(log_gap) & (log_gap > log_floor)
    if use.sum() < 5:
        raise DegenerateFit(f"only {int(use.sum())} usable points in [{burn}, {hi}]")
    x, y = ns[use].astype(float), log_gap[use]
    if np.ptp(y) == 0:
        return RateFit(0.0, 1.0, 1.0, int(use.sum()))
    res = stats.linregress(x, y)
    return RateFit(float(res.slope), float(res.rvalue ** 2), math.exp(res.slope), int(use.sum()))


def rho_scaled_log(trace: StabilityTrace, frac: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """(n, log(rho^{-n} gap_V(n))) over the last ``frac`` of the run, for the plug-in rho."""
    N = trace.log_gap.size - 1
    ns = np.arange(int(math.floor(N * (1.0 - frac))), N + 1)
    return ns, trace.log_gap[ns] - ns * trace.constants.log_rho


def rho_scaled_decreasing(trace: StabilityTrace, frac: float = 0.25, strict: bool = False) -> bool:
    """Whether rho^{-n} gap_V(n) decreases over the last ``frac`` of the run.

    The default reads "decreasing" as a trend: negative least-squares slope
    and a final value below the first.  ``strict=True`` demands a decrease
    at every step, which V-norms with Gaussian tails do not deliver because
    a single large observation can inflate the weighted gap by many orders.
    """
    ns, scaled = rho_scaled_log(trace, frac)
    if strict:
        return bool(np.all(np.diff(scaled) < 0))
    slope = stats.linregress(ns.astype(float), scaled).slope
    return bool(slope < 0 and scaled[-1] < scaled[0])


def prediction_vnorm_divergence(alpha: float, c: float, radii, x: float = 0.0) -> np.ndarray:
    """Truncated integrals over [-R, R] of exp(z^2 (c-1)/2 + alpha z x - alpha^2 x^2 / 2)."""
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and increasing")

    def f(z):
        return math.exp(0.5 * z * z * (c - 1.0) + alpha * z * x - 0.5 * alpha * alpha * x * x)

    out = np.empty(radii.size)
    prev_r, acc = 0.0, 0.0
    # accumulate over the annuli so each value builds on the previous one
    for i, r in enumerate(radii):
        left, _ = integrate.quad(f, -r, -prev_r, epsabs=0.0, epsrel=1e-12, limit=200)
        right, _ = integrate.quad(f, prev_r, r, epsabs=0.0, epsrel=1e-12, limit=200)
        acc += left + right
        out[i] = acc
        prev_r = r
    return out


# ---------------------------------------------------------------------------
# presets and seed fan-out


def initial_law(grid, spec: dict) -> GridMeasure:
    """Grid Gaussian from a table {mean, var}."""
    return grid_gaussian(grid, float(spec["mean"]), float(spec["var"]))


def _one_seed(args):
    model, scen, lam0, lam0t, n, seed, v, ybar, d = args
    return stability_run(model, scen, lam0, lam0t, n, seed, v, ybar, d)


def run_seeds(model: ModelSpec, scenario: Scenario, lam0: GridMeasure, lam0_tilde: GridMeasure,
              n: int, seeds, v: WeightSpec, ybar, d: float | None = None,
              workers: int = 1) -> list[StabilityTrace]:
    """stability_run over several seeds, optionally in worker processes; sorted by seed."""
    jobs = [(model, scenario, lam0, lam0_tilde, n, int(s), v, ybar, d) for s in sorted(seeds)]
    if workers <= 1:
        traces = [_one_seed(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            traces = list(ex.map(_one_seed, jobs))
    return sorted(traces, key=lambda t: t.seed)
