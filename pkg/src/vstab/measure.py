"""Grid representation of measures and kernels on the real line.

A measure is stored as signed masses on the nodes of a grid; the cell
width of the quadrature rule is already folded into the masses, so that
integration is a dot product and kernels compose as matrices.  V-weighted
sums are evaluated in log space whenever the weight function would
overflow double precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from .exceptions import GridMismatch, ZeroMass

__all__ = [
    "Grid",
    "GridMeasure",
    "WeightSpec",
    "KernelGrid",
    "v_eval",
    "log_v",
    "vnorm",
    "log_vnorm",
    "integrate",
    "normalize",
    "apply_kernel",
    "compose_kernels",
    "identity_kernel",
    "kernel_vnorm",
    "tail_diagnostic",
    "grid_gaussian",
]

# log(V) above this is evaluated in log space to avoid overflow in exp
_LOG_OVERFLOW = 700.0


@dataclass(frozen=True)
class Grid:
    """Uniform midpoint grid on [lo, hi] with ``points`` cells."""

    lo: float
    hi: float
    points: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"invalid window [{self.lo}, {self.hi}]")
        if self.points < 1:
            raise ValueError("points must be >= 1")

    @classmethod
    def symmetric(cls, L: float, points: int) -> "Grid":
        return cls(-float(L), float(L), int(points))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.points

    @property
    def nodes(self) -> np.ndarray:
        return self.lo + self.width * (np.arange(self.points) + 0.5)


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Finitely supported signed measure: mass ``weights[i]`` at ``nodes[i]``."""

    nodes: np.ndarray
    weights: np.ndarray
    lo: float = field(default=None)
    hi: float = field(default=None)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or weights.shape != nodes.shape:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if nodes.size == 0:
            raise ValueError("a grid measure needs at least one node")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        lo = nodes[0] if self.lo is None else float(self.lo)
        hi = nodes[-1] if self.hi is None else float(self.hi)
        if not (lo <= nodes[0] and nodes[-1] <= hi):
            raise ValueError("nodes must lie inside [lo, hi]")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def on_grid(cls, grid: Grid, weights) -> "GridMeasure":
        return cls(grid.nodes, weights, grid.lo, grid.hi)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def is_probability(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.weights >= 0) and abs(self.mass - 1.0) <= tol)

    def same_support(self, other: "GridMeasure") -> bool:
        return self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)

    def _check(self, other):
        if not self.same_support(other):
            raise GridMismatch("measures live on different nodes")

    def with_weights(self, weights) -> "GridMeasure":
        return GridMeasure(self.nodes, weights, self.lo, self.hi)

    def __add__(self, other: "GridMeasure") -> "GridMeasure":
        self._check(other)
        return self.with_weights(self.weights + other.weights)

    def __sub__(self, other: "GridMeasure") -> "GridMeasure":
        self._check(other)
        return self.with_weights(self.weights - other.weights)

    def __mul__(self, scalar: float) -> "GridMeasure":
        return self.with_weights(float(scalar) * self.weights)

    __rmul__ = __mul__

    def mean(self) -> float:
        return float(np.dot(self.nodes, self.weights) / self.mass)

    def var(self) -> float:
        mu = self.mean()
        return float(np.dot((self.nodes - mu) ** 2, self.weights) / self.mass)


@dataclass(frozen=True)
class WeightSpec:
    """Weight function V(x) = exp(c|x|) ("exp_abs") or exp(c x^2 / 2) ("exp_square")."""

    family: Literal["exp_abs", "exp_square"]
    c: float

    def __post_init__(self):
        if self.family not in ("exp_abs", "exp_square"):
            raise ValueError(f"unknown weight family {self.family!r}")
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError("weight growth rate c must be positive and finite")

    def log(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "exp_abs":
            return self.c * np.abs(x)
        return 0.5 * self.c * x * x

    def __call__(self, x):
        return v_eval(self, x)

    def to_dict(self) -> dict:
        return {"family": self.family, "c": self.c}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSpec":
        return cls(d["family"], float(d["c"]))


def log_v(v: WeightSpec | None, x):
    """log V(x); ``v=None`` stands for the constant weight 1 (total variation)."""
    if v is None:
        return np.zeros_like(np.asarray(x, dtype=float))
    return v.log(x)


def v_eval(v: WeightSpec | None, x):
    """V(x), overflowing to +inf far out in the tails."""
    with np.errstate(over="ignore"):
        out = np.exp(log_v(v, x))
    return float(out) if np.ndim(out) == 0 else out


def _log_abs_sum(log_weight, w) -> float:
    # log of sum(exp(log_weight) * |w|), ignoring zero masses
    w = np.abs(np.asarray(w, dtype=float))
    mask = w > 0
    if not np.any(mask):
        return -np.inf
    return float(logsumexp(log_weight[mask] + np.log(w[mask])))


def log_vnorm(m: GridMeasure, v: WeightSpec | None) -> float:
    return _log_abs_sum(log_v(v, m.nodes), m.weights)


def vnorm(m: GridMeasure, v: WeightSpec | None) -> float:
    """sum_i V(nodes[i]) |weights[i]|; ``v=None`` gives the total-variation mass."""
    lv = log_v(v, m.nodes)
    if lv.size and lv.max() < _LOG_OVERFLOW:
        return float(np.sum(np.exp(lv) * np.abs(m.weights)))
    with np.errstate(over="ignore"):
        return float(np.exp(_log_abs_sum(lv, m.weights)))


def integrate(m: GridMeasure, phi) -> float:
    """m(phi) for a callable phi or an array of values at the nodes."""
    vals = phi(m.nodes) if callable(phi) else phi
    vals = np.broadcast_to(np.asarray(vals, dtype=float), m.nodes.shape)
    return float(np.dot(vals, m.weights))


def normalize(m: GridMeasure) -> tuple[GridMeasure, float]:
    """Return (m / mass, mass) for a nonnegative measure of positive mass."""
    if np.any(m.weights < 0):
        raise ValueError("normalize expects nonnegative weights")
    mass = float(np.sum(m.weights))
    if not (mass > 0 and np.isfinite(mass)):
        raise ZeroMass()
    if mass == 1.0:
        return m, mass
    return m.with_weights(m.weights / mass), mass


@dataclass(frozen=True, eq=False)
class KernelGrid:
    """Nonnegative kernel between two grids.

    ``density[i, j]`` is the kernel density from ``source[i]`` to
    ``target[j]`` multiplied by the target cell width.
    """

    source: np.ndarray
    target: np.ndarray
    density: np.ndarray
    target_lo: float = None
    target_hi: float = None

    def __post_init__(self):
        src = np.asarray(self.source, dtype=float)
        tgt = np.asarray(self.target, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if dens.shape != (src.size, tgt.size):
            raise ValueError("density must have shape (len(source), len(target))")
        for nodes in (src, tgt):
            if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
                raise ValueError("kernel nodes must be strictly increasing")
        if not np.all(np.isfinite(dens)) or np.any(dens < 0):
            raise ValueError("kernel entries must be finite and nonnegative")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", tgt)
        object.__setattr__(self, "density", dens)
        if self.target_lo is None:
            object.__setattr__(self, "target_lo", float(tgt[0]))
        if self.target_hi is None:
            object.__setattr__(self, "target_hi", float(tgt[-1]))

    @classmethod
    def on_grid(cls, grid: Grid, density) -> "KernelGrid":
        nodes = grid.nodes
        return cls(nodes, nodes, density, grid.lo, grid.hi)

    def row_sums(self) -> np.ndarray:
        return self.density.sum(axis=1)

    def row(self, i: int) -> GridMeasure:
        return GridMeasure(self.target, self.density[i], self.target_lo, self.target_hi)


def identity_kernel(nodes, lo=None, hi=None) -> KernelGrid:
    nodes = np.asarray(nodes, dtype=float)
    return KernelGrid(nodes, nodes, np.eye(nodes.size), lo, hi)


def apply_kernel(m: GridMeasure, k: KernelGrid) -> GridMeasure:
    """The measure m K, with (m K)[j] = sum_i m[i] K[i, j]."""
    if m.nodes.shape != k.source.shape or not np.array_equal(m.nodes, k.source):
        raise GridMismatch("measure nodes differ from kernel source nodes")
    return GridMeasure(k.target, m.weights @ k.density, k.target_lo, k.target_hi)


def compose_kernels(a: KernelGrid, b: KernelGrid) -> KernelGrid:
    """The kernel a b (apply a first, then b)."""
    if a.target.shape != b.source.shape or not np.array_equal(a.target, b.source):
        raise GridMismatch("target nodes of the first kernel differ from source nodes of the second")
    return KernelGrid(a.source, b.target, a.density @ b.density, b.target_lo, b.target_hi)


def kernel_vnorm(k: KernelGrid, v: WeightSpec | None) -> float:
    """max over source nodes of (K V)(x) / V(x), restricted to the grid window."""
    lv_t = log_v(v, k.target)
    lv_s = log_v(v, k.source)
    shift = lv_t.max()
    with np.errstate(divide="ignore"):
        log_rows = np.log(k.density @ np.exp(lv_t - shift)) + shift - lv_s
    with np.errstate(over="ignore"):
        return float(np.exp(log_rows.max()))


def tail_diagnostic(m: GridMeasure, v: WeightSpec | None, frac: float = 0.05) -> float:
    """Share of the V-weighted mass carried by the outer ``frac`` of the nodes.

    The outer region is the ``frac`` fraction of nodes closest to either
    end of the window (half on each side).
    """
    n = m.nodes.size
    k = max(1, int(round(0.5 * frac * n)))
    lv = log_v(v, m.nodes)
    total = _log_abs_sum(lv, m.weights)
    if total == -np.inf:
        return 0.0
    outer = np.zeros(n, dtype=bool)
    outer[:k] = True
    outer[n - k:] = True
    tail = _log_abs_sum(lv[outer], m.weights[outer])
    return float(np.exp(tail - total))


def grid_gaussian(grid: Grid, mean: float, var: float) -> GridMeasure:
    """N(mean, var) discretized on the grid and renormalized to unit mass."""
    if not var > 0:
        raise ValueError("variance must be positive")
    x = grid.nodes
    logw = -0.5 * (x - mean) ** 2 / var
    w = np.exp(logw - logw.max())
    return GridMeasure.on_grid(grid, w / w.sum())


def log_density_to_measure(grid: Grid, logdens: np.ndarray) -> GridMeasure:
    """Probability measure with weights proportional to exp(logdens) on the grid."""
    w = np.exp(logdens - np.max(logdens))
    return GridMeasure.on_grid(grid, w / w.sum())

