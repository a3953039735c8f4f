"""Normalized kernel-product recursion on a grid.

``run`` produces eta_0, ..., eta_n together with the normalizers
lambda_k = eta_k(G_k), where G_k(x) is the total mass of the kernel at
step k.  The kernel is never formed as a dense matrix per step: the
transition part f is built once per grid and the observation factor is
applied as a vector, on the left (prediction) or the right (filter).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exceptions import GridMismatch, ZeroMass
from .measure import (Grid, GridMeasure, WeightSpec, log_v, log_vnorm,
                      tail_diagnostic)
from .models import (ModelSpec, ObservationPath, Scenario, obs_density,
                     transition_matrix)


def grid_of(m: GridMeasure) -> Grid:
    """Recover the uniform midpoint grid a measure lives on."""
    grid = Grid(m.lo, m.hi, m.nodes.size)
    if not np.allclose(grid.nodes, m.nodes, rtol=0, atol=1e-12 * max(1.0, abs(m.hi))):
        raise GridMismatch("measure is not supported on a uniform midpoint grid")
    return grid


class StepKernel:
    """Factored one-step kernel Q = diag(left) F diag(right) on a fixed grid."""

    def __init__(self, model: ModelSpec, scenario: Scenario, grid: Grid,
                 trans: np.ndarray | None = None):
        self.model = model
        self.scenario = Scenario(scenario)
        self.grid = grid
        self.nodes = grid.nodes
        self.F = transition_matrix(model, grid) if trans is None else trans

    def obs_vector(self, y_now: float, y_next: float) -> np.ndarray:
        y = y_next if self.scenario is Scenario.FILTER else y_now
        return obs_density(self.model, self.nodes, y)

    def forward(self, w: np.ndarray, y_now: float, y_next: float) -> np.ndarray:
        """Row vector w times Q."""
        g = self.obs_vector(y_now, y_next)
        if self.scenario is Scenario.FILTER:
            return (w @ self.F) * g
        return (w * g) @ self.F

    def backward(self, h: np.ndarray, y_now: float, y_next: float) -> np.ndarray:
        """Q applied to the function h."""
        g = self.obs_vector(y_now, y_next)
        if self.scenario is Scenario.FILTER:
            return self.F @ (g * h)
        return g * (self.F @ h)

    def dense(self, y_now: float, y_next: float) -> np.ndarray:
        g = self.obs_vector(y_now, y_next)
        if self.scenario is Scenario.FILTER:
            return self.F * g[None, :]
        return g[:, None] * self.F


def initial_measure(model: ModelSpec, scenario: Scenario, lam0: GridMeasure,
                    y0: float) -> GridMeasure:
    return _initial(model, scenario, lam0, y0)[0]


def _initial(model, scenario, lam0, y0):
    if Scenario(scenario) is Scenario.PREDICTION:
        return lam0, 1.0
    w = lam0.weights * obs_density(model, lam0.nodes, y0)
    mass = float(w.sum())
    if not (mass > 0 and np.isfinite(mass)):
        raise ZeroMass("initial reweighting underflowed", step=0)
    return lam0.with_weights(w / mass), mass


def step(eta_prev: GridMeasure, model: ModelSpec, scenario: Scenario, y_now: float,
         y_next: float, kernel: StepKernel | None = None) -> tuple[GridMeasure, float]:
    """One normalized kernel step; returns (eta, lambda) with lambda = eta_prev(G)."""
    if kernel is None:
        kernel = StepKernel(model, scenario, grid_of(eta_prev))
    u = kernel.forward(eta_prev.weights, y_now, y_next)
    lam = float(u.sum())
    if not (lam > 0 and np.isfinite(lam)):
        raise ZeroMass("kernel step lost all mass")
    return eta_prev.with_weights(u / lam), lam


@dataclass(eq=False)
class FilterRun:
    etas: list
    lambdas: np.ndarray
    v_moments: np.ndarray
    tail_diag: np.ndarray
    scenario: Scenario
    weight: WeightSpec | None
    log_init_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.etas) - 1

    @property
    def log_normalizer(self) -> float:
        """log nu Q_n(X) = sum of log lambda_k."""
        return float(np.sum(np.log(self.lambdas)))

    def to_csv(self, path, density_sidecar=None):
        """Write k, lambda_k, v_moment_k, tail_diag_k (lambda_k empty on the last row)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "lambda_k", "v_moment_k", "tail_diag_k"])
            for k in range(self.n + 1):
                lam = _fmt(self.lambdas[k]) if k < self.n else ""
                w.writerow([k, lam, _fmt(self.v_moments[k]), _fmt(self.tail_diag[k])])
        if density_sidecar is not None:
            np.save(density_sidecar, np.vstack([e.weights for e in self.etas]))


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _log_moment(eta: GridMeasure, v: WeightSpec | None) -> float:
    return log_vnorm(eta, v)


def run(model: ModelSpec, scenario: Scenario, lam0: GridMeasure, path: ObservationPath,
        v: WeightSpec | None = None, n: int | None = None,
        kernel: StepKernel | None = None) -> FilterRun:
    """Run n = len(path) - 1 steps (or the given n) from the initial law lam0.

    Step k reads Y[k] (prediction) or Y[k+1] (filter).
    """
    y = path.y if isinstance(path, ObservationPath) else np.asarray(path, dtype=float)
    n = y.size - 1 if n is None else int(n)
    if n < 0 or n > y.size - 1 + (Scenario(scenario) is Scenario.PREDICTION):
        raise ValueError("path too short for the requested number of steps")
    if kernel is None:
        kernel = StepKernel(model, scenario, grid_of(lam0))
    eta, mass0 = _initial(model, scenario, lam0, y[0])
    etas, lams = [eta], []
    for k in range(n):
        y_next = y[k + 1] if k + 1 < y.size else np.nan
        try:
            eta, lam = step(eta, model, scenario, y[k], y_next, kernel)
        except ZeroMass as exc:
            raise ZeroMass(str(exc), step=k) from None
        etas.append(eta)
        lams.append(lam)
    with np.errstate(over="ignore"):
        vmom = np.exp([_log_moment(e, v) for e in etas])
    tails = np.array([tail_diagnostic(e, v) for e in etas])
    return FilterRun(etas, np.array(lams), vmom, tails, Scenario(scenario), v,
                     log_init_mass=math.log(mass0))


@dataclass(eq=False)
class SDecomposition:
    """Backward functions h[k] = h_{k,n} (k = 0..n) and the forward S-chain image of nu."""

    n: int
    h: np.ndarray
    lambdas: np.ndarray
    s_rowsums: np.ndarray
    reconstruction: GridMeasure
    nu_h0: float
    kernel: StepKernel = field(repr=False)
    y: np.ndarray = field(repr=False)

    def s_matrix(self, k: int) -> np.ndarray:
        """Dense S_{k,n}, 1 <= k <= n."""
        if not 1 <= k <= self.n:
            raise IndexError("k must lie in 1..n")
        Q = self.kernel.dense(self.y[k - 1], self.y[k] if k < self.y.size else np.nan)
        return Q * self.h[k][None, :] / (self.lambdas[k - 1] * self.h[k - 1][:, None])


def s_decompose(model: ModelSpec, scenario: Scenario, path: ObservationPath, n: int,
                lam0: GridMeasure, filter_run: FilterRun | None = None,
                kernel: StepKernel | None = None) -> SDecomposition:
    """h_{k,n} by backward recursion, S-kernel row sums, and the S-chain reconstruction of eta_n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    y = path.y if isinstance(path, ObservationPath) else np.asarray(path, dtype=float)
    if kernel is None:
        kernel = StepKernel(model, scenario, grid_of(lam0))
    if filter_run is None:
        filter_run = run(model, scenario, lam0, y, n=n, kernel=kernel)
    lams = filter_run.lambdas[:n]
    nu = filter_run.etas[0]
    y_at = lambda k: (y[k], y[k + 1] if k + 1 < y.size else np.nan)  # noqa: E731

    npts = nu.nodes.size
    h = np.empty((n + 1, npts))
    h[n] = 1.0
    for k in range(n - 1, -1, -1):
        h[k] = kernel.backward(h[k + 1], *y_at(k)) / lams[k]

    rowsums = np.empty((n, npts))
    r = nu.weights * h[0]
    nu_h0 = float(r.sum())
    for k in range(1, n + 1):
        # S_k = diag(1 / (lambda_{k-1} h_{k-1})) Q_{k-1} diag(h_k)
        qh = kernel.backward(h[k], *y_at(k - 1))
        rowsums[k - 1] = qh / (lams[k - 1] * h[k - 1])
        r = kernel.forward(r / (lams[k - 1] * h[k - 1]), *y_at(k - 1)) * h[k]
    recon = nu.with_weights(r)
    return SDecomposition(n, h, lams, rowsums, recon, nu_h0, kernel, y)


def log_difference_vnorms(run_a: FilterRun, run_b: FilterRun, path, v: WeightSpec | None,
                          kernel: StepKernel) -> np.ndarray:
    """log ||eta_n - eta~_n||_V for n = 0..N, without subtracting nearly equal measures.

    Uses the exact identity
        delta_n = (delta_{n-1} Q - delta_{n-1}(G) eta~_n) / lambda_{n-1},
    where delta_n = eta_n - eta~_n and lambda is the normalizer of run_a, so
    the gap stays accurate long after it drops below the rounding level of
    the filters themselves.
    """
    y = path.y if isinstance(path, ObservationPath) else np.asarray(path, dtype=float)
    if run_a.n != run_b.n:
        raise ValueError("runs have different lengths")
    lv = log_v(v, run_a.etas[0].nodes)
    delta = run_a.etas[0].weights - run_b.etas[0].weights
    out = np.empty(run_a.n + 1)
    out[0] = _log_abs(lv, delta)
    for k in range(run_a.n):
        y_next = y[k + 1] if k + 1 < y.size else np.nan
        u = kernel.forward(delta, y[k], y_next)
        delta = (u - u.sum() * run_b.etas[k + 1].weights) / run_a.lambdas[k]
        out[k + 1] = _log_abs(lv, delta)
    return out


def _log_abs(lv, w):
    a = np.abs(w)
    mask = a > 0
    if not np.any(mask):
        return -np.inf
    return float(logsumexp(lv[mask] + np.log(a[mask])))
