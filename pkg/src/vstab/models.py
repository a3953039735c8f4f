"""Scalar hidden Markov models and the random-environment kernels they induce.

Two model families are covered, both with Gaussian noise:

* ``linear``:    X[k+1] = alpha X[k] + V[k],           Y[k] = X[k] + beta_obs W[k]
* ``nonlinear``: X[k+1] = X[k] + b(X[k]) + sigma V[k], Y[k] = h(X[k]) + beta_obs W[k]

Given an observation path, the filter recursion is written as a product
of nonnegative kernels.  In the *filter* scenario the kernel at time k is
f(x, dx') g(x', Y[k+1]) and the initial measure is lambda reweighted by
g(., Y[0]); in the *prediction* scenario the kernel is g(x, Y[k]) f(x, dx')
and the initial measure is lambda itself.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measure import Grid, KernelGrid

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Scenario(str, enum.Enum):
    FILTER = "filter"
    PREDICTION = "prediction"


@dataclass(frozen=True)
class Fn:
    """Small library of named scalar functions that can round-trip through JSON.

    ``identity``: x;  ``zero``: 0;  ``linear``: a x;  ``affine``: a + b x;
    ``linear_sin``: a x + b sin(x);  ``tanh``: a tanh(x);  ``cubic``: a x^3;
    ``exp``: exp(a x).
    """

    kind: str
    params: tuple = ()

    _ARITY = {"identity": 0, "zero": 0, "linear": 1, "affine": 2, "linear_sin": 2,
              "tanh": 1, "cubic": 1, "exp": 1}

    def __post_init__(self):
        if self.kind not in self._ARITY:
            raise ValueError(f"unknown function kind {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        if len(params) != self._ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {self._ARITY[self.kind]} parameter(s)")
        object.__setattr__(self, "params", params)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "identity":
            return x
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return p[0] * x
        if self.kind == "affine":
            return p[0] + p[1] * x
        if self.kind == "linear_sin":
            return p[0] * x + p[1] * np.sin(x)
        if self.kind == "tanh":
            return p[0] * np.tanh(x)
        if self.kind == "cubic":
            return p[0] * x ** 3
        with np.errstate(over="ignore"):
            return np.exp(p[0] * x)

    def to_dict(self):
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(d.get("params", ())))


@dataclass(frozen=True)
class ModelSpec:
    """HMM with Gaussian transition f and Gaussian observation density g.

    Use :meth:`linear` or :meth:`nonlinear` rather than the raw constructor.
    ``b`` and ``h`` may be :class:`Fn` instances (serializable) or plain
    callables acting elementwise on arrays.
    """

    variant: str
    beta_obs: float = 1.0
    alpha: float | None = None
    b: Callable | None = field(default=None, compare=False)
    sigma: float = 1.0
    h: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.variant not in ("linear", "nonlinear"):
            raise ValueError(f"unknown model variant {self.variant!r}")
        if not self.beta_obs > 0:
            raise ValueError("beta_obs must be positive")
        if self.variant == "linear":
            if self.alpha is None or not abs(self.alpha) < 1:
                raise ValueError("linear model requires |alpha| < 1")
        else:
            if self.b is None or self.h is None:
                raise ValueError("nonlinear model requires b and h")
            if not (0 < self.sigma < np.inf):
                raise ValueError("sigma must be positive and finite")

    @classmethod
    def linear(cls, alpha: float, beta_obs: float = 1.0) -> "ModelSpec":
        return cls("linear", beta_obs=float(beta_obs), alpha=float(alpha))

    @classmethod
    def nonlinear(cls, b, sigma: float, h, beta_obs: float = 1.0) -> "ModelSpec":
        return cls("nonlinear", beta_obs=float(beta_obs), b=b, sigma=float(sigma), h=h)

    @property
    def is_linear(self) -> bool:
        return self.variant == "linear"

    @property
    def trans_sd(self) -> float:
        return 1.0 if self.is_linear else self.sigma

    def trans_mean(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return self.alpha * x
        return x + np.asarray(self.b(x), dtype=float)

    def obs_mean(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return x
        return np.asarray(self.h(x), dtype=float)

    @property
    def g_max(self) -> float:
        """sup over (x, y) of the observation density."""
        return 1.0 / (math.sqrt(2.0 * math.pi) * self.beta_obs)

    def to_dict(self) -> dict:
        if self.is_linear:
            return {"variant": "linear", "alpha": self.alpha, "beta_obs": self.beta_obs}
        if not (isinstance(self.b, Fn) and isinstance(self.h, Fn)):
            raise TypeError("only models built from Fn instances can be serialized")
        return {"variant": "nonlinear", "b": self.b.to_dict(), "sigma": self.sigma,
                "h": self.h.to_dict(), "beta_obs": self.beta_obs}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        if d["variant"] == "linear":
            return cls.linear(d["alpha"], d.get("beta_obs", 1.0))
        return cls.nonlinear(Fn.from_dict(d["b"]), d.get("sigma", 1.0),
                             Fn.from_dict(d["h"]), d.get("beta_obs", 1.0))


@dataclass(frozen=True, eq=False)
class ObservationPath:
    y: np.ndarray
    seed: int | None = None
    origin: str = "external"
    model: dict | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or not np.all(np.isfinite(y)):
            raise ValueError("observations must be a finite 1-d sequence")
        if self.origin not in ("simulated", "external"):
            raise ValueError("origin must be 'simulated' or 'external'")
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.size


def log_transition_density(model: ModelSpec, x, xp):
    sd = model.trans_sd
    z = (np.asarray(xp, dtype=float) - model.trans_mean(x)) / sd
    return -0.5 * z * z - LOG_SQRT_2PI - math.log(sd)


def transition_density(model: ModelSpec, x, xp):
    out = np.exp(log_transition_density(model, x, xp))
    return float(out) if np.ndim(out) == 0 else out


def log_obs_density(model: ModelSpec, x, y):
    beta = model.beta_obs
    z = (np.asarray(y, dtype=float) - model.obs_mean(x)) / beta
    return -0.5 * z * z - LOG_SQRT_2PI - math.log(beta)


def obs_density(model: ModelSpec, x, y):
    out = np.exp(log_obs_density(model, x, y))
    return float(out) if np.ndim(out) == 0 else out


def transition_matrix(model: ModelSpec, grid: Grid) -> np.ndarray:
    """f(x_i, x_j) times the cell width, on the grid nodes."""
    x = grid.nodes
    return np.exp(log_transition_density(model, x[:, None], x[None, :])) * grid.width


def scenario_y(scenario: Scenario, y_now: float, y_next: float) -> float:
    """The observation read by the kernel of one step."""
    return y_next if Scenario(scenario) is Scenario.FILTER else y_now


def q_kernel(model: ModelSpec, scenario: Scenario, y_now: float, y_next: float,
             grid: Grid, trans: np.ndarray | None = None) -> KernelGrid:
    """Grid version of the one-step kernel for the given scenario.

    Filter: f(x_i, x_j) g(x_j, y_next) * cell.  Prediction: g(x_i, y_now) f(x_i, x_j) * cell.
    """
    F = transition_matrix(model, grid) if trans is None else trans
    x = grid.nodes
    if Scenario(scenario) is Scenario.FILTER:
        dens = F * obs_density(model, x, y_next)[None, :]
    else:
        dens = obs_density(model, x, y_now)[:, None] * F
    return KernelGrid.on_grid(grid, dens)


def _rng(seed: int) -> np.random.Generator:
    # Philox is counter based: the stream is a pure function of the seed
    return np.random.Generator(np.random.Philox(int(seed)))


def simulate(model: ModelSpec, n: int, seed: int,
             burn_in: int = 10_000) -> tuple[np.ndarray, ObservationPath]:
    """Draw (X[0..n-1], Y[0..n-1]) with X[0] from the stationary law.

    The linear model starts exactly from N(0, 1/(1 - alpha^2)); the nonlinear
    model starts from the end of a ``burn_in``-step run from X = 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    if model.is_linear:
        x0 = rng.standard_normal() / math.sqrt(1.0 - model.alpha ** 2)
    else:
        x0 = 0.0
        for e in rng.standard_normal(burn_in):
            x0 = float(model.trans_mean(x0)) + model.sigma * e
    noise_v = rng.standard_normal(n)
    noise_w = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = x0
    for k in range(n - 1):
        x[k + 1] = float(model.trans_mean(x[k])) + model.trans_sd * noise_v[k]
    y = model.obs_mean(x) + model.beta_obs * noise_w
    meta = model.to_dict() if (model.is_linear or isinstance(model.b, Fn) and isinstance(model.h, Fn)) else None
    return x, ObservationPath(y, seed=int(seed), origin="simulated", model=meta)
