"""Numerical checks of the stability hypotheses for the scalar models.

Everything that can be very small (minorization constants on wide sets,
1 - rho_Cd, ...) is carried in log form so that the reported constants
stay meaningful when they underflow double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.special import ndtr

from .exceptions import DomainError, GammaTooSmall, KappaNonpositive
from .measure import Grid, GridMeasure, WeightSpec, log_v
from .models import (LOG_SQRT_2PI, ModelSpec, Scenario, log_obs_density,
                     log_transition_density)

_SAMPLES = 2001


def _interval(c) -> tuple[float, float]:
    if np.isscalar(c):
        r = float(c)
        if not r > 0:
            raise DomainError(f"radius must be positive, got {r}")
        return -r, r
    lo, hi = map(float, c)
    if not hi > lo:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    return lo, hi


def _range_on(fn, lo, hi) -> tuple[float, float]:
    xs = np.linspace(lo, hi, _SAMPLES)
    vals = np.asarray(fn(xs), dtype=float)
    return float(vals.min()), float(vals.max())


def _dist_bounds(a_lo, a_hi, b_lo, b_hi) -> tuple[float, float]:
    """Smallest and largest |a - b| for a in [a_lo, a_hi], b in [b_lo, b_hi]."""
    dmin = max(0.0, a_lo - b_hi, b_lo - a_hi)
    dmax = max(a_hi - b_lo, b_hi - a_lo)
    return dmin, dmax


# ---------------------------------------------------------------------------
# local Doeblin constants


@dataclass(frozen=True)
class LDReport:
    """Minorization/majorization constants of the kernel on C = [lo, hi]."""

    C: tuple
    log_eps_minus_tilde: float
    log_eps_plus_tilde: float
    h_range: tuple
    beta_obs: float
    K_set: tuple
    log_one_minus_rho_Cd: float

    @property
    def eps_minus_tilde(self) -> float:
        return math.exp(self.log_eps_minus_tilde)

    @property
    def eps_plus_tilde(self) -> float:
        return math.exp(self.log_eps_plus_tilde)

    @property
    def rho_Cd(self) -> float:
        return -math.expm1(self.log_one_minus_rho_Cd)

    @property
    def width(self) -> float:
        return self.C[1] - self.C[0]

    def _log_g_bounds(self, y):
        dmin, dmax = _dist_bounds(y, y, *self.h_range)
        base = -LOG_SQRT_2PI - math.log(self.beta_obs)
        two_b2 = 2.0 * self.beta_obs ** 2
        return base - dmax ** 2 / two_b2, base - dmin ** 2 / two_b2

    def log_eps_minus(self, y: float) -> float:
        return self.log_eps_minus_tilde + self._log_g_bounds(y)[0]

    def log_eps_plus(self, y: float) -> float:
        return self.log_eps_plus_tilde + self._log_g_bounds(y)[1]

    def eps_minus(self, y: float) -> float:
        return math.exp(self.log_eps_minus(y))

    def eps_plus(self, y: float) -> float:
        return math.exp(self.log_eps_plus(y))

    def mu_C(self, A) -> float:
        """Normalized Lebesgue measure of the interval A intersected with C."""
        lo, hi = max(A[0], self.C[0]), min(A[1], self.C[1])
        return max(0.0, hi - lo) / self.width

    def mu_C_measure(self, points: int = 200) -> GridMeasure:
        grid = Grid(self.C[0], self.C[1], points)
        return GridMeasure.on_grid(grid, np.full(points, 1.0 / points))

    def to_dict(self) -> dict:
        return {
            "C": list(self.C),
            "eps_minus_tilde": self.eps_minus_tilde,
            "eps_plus_tilde": self.eps_plus_tilde,
            "log_eps_minus_tilde": self.log_eps_minus_tilde,
            "log_eps_plus_tilde": self.log_eps_plus_tilde,
            "rho_Cd": self.rho_Cd,
            "log_one_minus_rho_Cd": self.log_one_minus_rho_Cd,
            "K_set": list(self.K_set),
        }


def ld_constants(model: ModelSpec, C, ybar) -> LDReport:
    """LD constants of f on C (radius or interval) and the induced rho over y in ybar.

    eps~^- / eps~^+ are |C| times the smallest / largest transition density
    between points of C.  The observation factor contributes inf / sup of
    g(x, y) over x in C.
    """
    lo, hi = _interval(C)
    ylo, yhi = _interval(ybar) if not np.isscalar(ybar) else (-abs(ybar), abs(ybar))
    sd = model.trans_sd
    m_lo, m_hi = _range_on(model.trans_mean, lo, hi)
    dmin, dmax = _dist_bounds(m_lo, m_hi, lo, hi)
    base = -LOG_SQRT_2PI - math.log(sd) + math.log(hi - lo)
    log_em = base - dmax ** 2 / (2 * sd * sd)
    log_ep = base - dmin ** 2 / (2 * sd * sd)
    h_range = _range_on(model.obs_mean, lo, hi)

    report = LDReport((lo, hi), log_em, log_ep, h_range, model.beta_obs, (ylo, yhi), 0.0)
    ys = np.linspace(ylo, yhi, _SAMPLES)
    log_ratio = min(report.log_eps_minus(y) - report.log_eps_plus(y) for y in ys)
    # 1 - rho = inf_y (eps^- / eps^+)^2
    return LDReport((lo, hi), log_em, log_ep, h_range, model.beta_obs, (ylo, yhi),
                    float(2.0 * log_ratio))


def ld_spot_check(model: ModelSpec, report: LDReport, n: int = 1000, seed: int = 0):
    """Sandwich check eps~^- mu_C(A) <= f(x, A) <= eps~^+ mu_C(A) on random x in C, A in C.

    Returns (lower_ok, upper_ok) boolean arrays.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    lo, hi = report.C
    x = rng.uniform(lo, hi, n)
    ab = np.sort(rng.uniform(lo, hi, (n, 2)), axis=1)
    m = model.trans_mean(x)
    sd = model.trans_sd
    fA = ndtr((ab[:, 1] - m) / sd) - ndtr((ab[:, 0] - m) / sd)
    muA = (ab[:, 1] - ab[:, 0]) / (hi - lo)
    slack = 1e-12 * muA
    lower_ok = report.eps_minus_tilde * muA <= fA + slack
    upper_ok = fA <= report.eps_plus_tilde * muA + slack
    return lower_ok, upper_ok


# ---------------------------------------------------------------------------
# drift


def kappa(alpha: float, c: float, beta_obs: float = 1.0) -> float:
    """Curvature constant of the Gaussian-tail drift exponent (1 + c/alpha^2 - 1/(2-c) when beta_obs = 1)."""
    a = 1.0 + 1.0 / beta_obs ** 2 - c
    if a <= 0:
        return -math.inf
    if alpha == 0:
        return math.inf
    return 1.0 + c / alpha ** 2 - 1.0 / a


def admissible_c_range(alpha: float, beta_obs: float = 1.0) -> tuple[float, float]:
    """Hull of {c > 0 : kappa(alpha, c) > 0}, located on a fine scan."""
    top = 1.0 + 1.0 / beta_obs ** 2
    cs = np.linspace(0.0, top, 20001)[1:-1]
    ok = np.array([kappa(alpha, c, beta_obs) > 0 for c in cs])
    if not ok.any():
        return (math.nan, math.nan)
    return float(cs[ok].min()), float(cs[ok].max())


def _psi_gauss_coeffs(alpha, c, beta):
    """psi(x, y) = qx x^2 + bxy x y + qy y^2 + k0 for the linear model with V = exp(c x^2/2)."""
    a = 1.0 + 1.0 / beta ** 2 - c
    b2 = beta ** 2
    qx = alpha ** 2 / (2 * a) - alpha ** 2 / 2 - c / 2
    bxy = alpha / (a * b2)
    qy = 1.0 / (2 * a * b2 * b2) - 1.0 / (2 * b2)
    k0 = -0.5 * math.log(2 * math.pi) - math.log(beta) - 0.5 * math.log(a)
    return qx, bxy, qy, k0


@dataclass(eq=False)
class DriftProfile:
    """Drift function W, its sublevel sets C_d and the associated constants."""

    model: ModelSpec
    weight: WeightSpec
    K_set: tuple
    psi: Callable = field(repr=False)
    d_under: float = 0.0
    D: tuple = (0.0, 0.0)
    M_const: float | None = None
    kappa: float | None = None

    def W(self, x):
        return np.maximum(0.0, -self.psi(np.asarray(x, dtype=float)))

    def C_of(self, d: float) -> tuple[float, float]:
        """Smallest interval containing {W <= d}."""
        return _sublevel_hull(self.W, d)

    def log_V_of(self, d: float) -> float:
        lo, hi = self.C_of(d)
        return float(self.weight.log(max(abs(lo), abs(hi))))

    def V_of(self, d: float) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_V_of(d)))

    def to_dict(self) -> dict:
        return {"d_under": self.d_under, "D": list(self.D), "M_const": self.M_const,
                "kappa": self.kappa, "K_set": list(self.K_set),
                "weight": self.weight.to_dict()}


def _sublevel_hull(W, d):
    # grow the scan window until W exceeds d on a whole outer band on both sides
    X = 2.0
    while True:
        band = np.concatenate([np.linspace(-2 * X, -X, 401), np.linspace(X, 2 * X, 401)])
        if np.all(W(band) > d) or X > 1e7:
            break
        X *= 2.0
    xs = np.linspace(-X, X, 200_001)
    inside = np.nonzero(W(xs) <= d)[0]
    if inside.size == 0:
        raise DomainError(f"sublevel set {{W <= {d}}} is empty on the scanned range")
    i_lo, i_hi = inside[0], inside[-1]
    f = lambda x: float(W(np.array([x]))[0]) - d  # noqa: E731
    lo = xs[i_lo] if i_lo == 0 else optimize.brentq(f, xs[i_lo - 1], xs[i_lo], xtol=1e-13)
    hi = xs[i_hi] if i_hi == xs.size - 1 else optimize.brentq(f, xs[i_hi], xs[i_hi + 1], xtol=1e-13)
    return float(lo), float(hi)


def drift_profile(model: ModelSpec, v: WeightSpec, ybar) -> DriftProfile:
    """Drift function for the given weight.

    exp_abs (any model):  psi(x) = c(|x + b(x)| - |x|) + log M + log sup g,
                          M = 2 exp(c^2 sigma^2 / 2).
    exp_square (linear):  psi(x, y) = log of (f g V)(x) / V(x) in closed form,
                          W(x) = 0 v -sup_{y in ybar} psi(x, y).
    """
    ylo, yhi = _interval(ybar) if not np.isscalar(ybar) else (-abs(ybar), abs(ybar))
    c = v.c
    if v.family == "exp_abs":
        sd = model.trans_sd
        M = 2.0 * math.exp(0.5 * c * c * sd * sd)
        const = math.log(M) + math.log(model.g_max)

        def psi(x):
            x = np.asarray(x, dtype=float)
            return c * (np.abs(model.trans_mean(x)) - np.abs(x)) + const

        prof = DriftProfile(model, v, (ylo, yhi), psi, M_const=M)
    else:
        if not model.is_linear:
            raise DomainError("the Gaussian-tail weight is only supported for the linear model")
        k = kappa(model.alpha, c, model.beta_obs)
        if not k > 0:
            raise KappaNonpositive(model.alpha, c, admissible_c_range(model.alpha, model.beta_obs))
        qx, bxy, qy, k0 = _psi_gauss_coeffs(model.alpha, c, model.beta_obs)

        def psi(x):
            x = np.asarray(x, dtype=float)
            cands = [qx * x * x + bxy * x * y + qy * y * y + k0 for y in (ylo, yhi)]
            if qy < 0:
                ystar = np.clip(-bxy * x / (2 * qy), ylo, yhi)
                cands.append(qx * x * x + bxy * x * ystar + qy * ystar * ystar + k0)
            return np.max(cands, axis=0)

        prof = DriftProfile(model, v, (ylo, yhi), psi, kappa=k)
    unit = np.linspace(-1.0, 1.0, _SAMPLES)
    prof.d_under = float(np.max(prof.W(unit)))
    prof.D = prof.C_of(prof.d_under)
    return prof


def psi_gauss(alpha: float, c: float, x, y, beta_obs: float = 1.0):
    """log of (1/V(x)) int f(x, dz) g(z, y) V(z) for the linear model and V = exp(c x^2/2)."""
    qx, bxy, qy, k0 = _psi_gauss_coeffs(alpha, c, beta_obs)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return qx * x * x + bxy * x * y + qy * y * y + k0


def drift_ratio(model: ModelSpec, v: WeightSpec, x: float, y: float,
                scenario: Scenario = Scenario.FILTER) -> float:
    """Q^y(V)(x) / V(x) by adaptive quadrature."""
    sd = model.trans_sd
    m = float(model.trans_mean(x))
    lvx = float(v.log(x))
    filt = Scenario(scenario) is Scenario.FILTER

    def logint(z):
        out = log_transition_density(model, x, z) + v.log(z) - lvx
        if filt:
            out = out + log_obs_density(model, z, y)
        return out

    span_lo = min(m, y) - 60 * sd
    span_hi = max(m, y) + 60 * sd
    if v.family == "exp_square" and model.is_linear:
        a = 1 / sd ** 2 + (1 / model.beta_obs ** 2 if filt else 0.0) - v.c
        if a <= 0:
            return math.inf
        peak = (m / sd ** 2 + (y / model.beta_obs ** 2 if filt else 0.0)) / a
        span_lo = min(span_lo, peak - 60 / math.sqrt(a))
        span_hi = max(span_hi, peak + 60 / math.sqrt(a))
    zs = np.linspace(span_lo, span_hi, 20001)
    lz = logint(zs)
    top = float(lz.max())
    zmax = float(zs[np.argmax(lz)])
    width = 12 * sd
    lo_, hi_ = zmax - width * 6, zmax + width * 6
    pts = [p for p in (0.0, zmax) if lo_ < p < hi_]
    val, _ = integrate.quad(lambda z: math.exp(float(logint(z)) - top), lo_, hi_,
                            points=pts, limit=400, epsabs=0.0, epsrel=1e-12)
    out = math.log(val) + top
    if not filt:
        out += float(log_obs_density(model, x, y))
    return math.exp(out)


def check_drift(model: ModelSpec, v: WeightSpec, profile: DriftProfile, d: float,
                n: int = 1000, seed: int = 0, span: float = 20.0,
                scenario: Scenario = Scenario.FILTER):
    """Sample (x outside C_d, y in ybar) and compare Q^y(V)(x)/V(x) with exp(-W(x)).

    Returns (x, y, ratio, bound); the drift holds where ratio <= bound + 1e-9.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    lo, hi = profile.C_of(d)
    side = rng.integers(0, 2, n)
    off = rng.uniform(0.0, span, n) + 1e-9
    x = np.where(side == 1, hi + off, lo - off)
    y = rng.uniform(*profile.K_set, n)
    ratio = np.array([drift_ratio(model, v, xi, yi, scenario) for xi, yi in zip(x, y)])
    bound = np.exp(-profile.W(x))
    return x, y, ratio, bound


# ---------------------------------------------------------------------------
# environment statistics


@dataclass(eq=False)
class EnvStats:
    """Per-step environment statistics along one observation path (k = 0..n-1)."""

    log_upsilon: np.ndarray
    log_psi: np.ndarray
    log_Z: np.ndarray
    in_K: np.ndarray
    log_T: np.ndarray
    d: float
    C_d: tuple
    D: tuple
    y_env: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.log_Z.size

    @property
    def upsilon(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_upsilon)

    @property
    def psi(self):
        return np.exp(self.log_psi)

    @property
    def Z(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_Z)

    @property
    def T(self):
        return np.exp(self.log_T)

    @property
    def l_hat(self) -> float:
        return float(np.mean(self.log_Z))

    @property
    def gamma_hat(self) -> float:
        return float(np.mean(self.in_K))

    def I(self, p: int, q: int) -> int:
        """Number of steps p..q (inclusive) whose environment lies in K; 0 if q < p."""
        if q < p:
            return 0
        return int(np.sum(self.in_K[p:q + 1]))

    @property
    def xi(self) -> np.ndarray:
        """Running mean of log Z minus its full-path mean (index n-1 holds n terms)."""
        k = np.arange(1, self.n + 1)
        return np.cumsum(self.log_Z) / k - self.l_hat

    @property
    def xi_tilde(self) -> np.ndarray:
        k = np.arange(1, self.n + 1)
        return np.cumsum(self.in_K) / k - self.gamma_hat

    def at_level(self, model: ModelSpec, profile: "DriftProfile", d: float) -> "EnvStats":
        """Same statistics with T_d recomputed for another level d."""
        Cd, log_T = _log_T(model, profile, d, self.y_env)
        return EnvStats(self.log_upsilon, self.log_psi, self.log_Z, self.in_K, log_T,
                        float(d), Cd, self.D, self.y_env)

    def to_dict(self) -> dict:
        return {"l_hat": self.l_hat, "gamma_hat": self.gamma_hat, "d": self.d,
                "C_d": list(self.C_d), "D": list(self.D), "n": self.n}


def env_stats(model: ModelSpec, scenario: Scenario, path, v: WeightSpec | None,
              profile: DriftProfile, d: float, grid: Grid, n: int | None = None,
              trans: np.ndarray | None = None) -> EnvStats:
    """Upsilon, Psi, Z, 1_K and T_d for each kernel Q_0..Q_{n-1} along the path.

    Upsilon is the V-operator norm restricted to the grid window; Psi is the
    smallest grid mass Q_k(x, D) over grid nodes x in D.
    """
    from .models import transition_matrix  # local to avoid a cycle in type hints

    y = path.y if hasattr(path, "y") else np.asarray(path, dtype=float)
    scen = Scenario(scenario)
    n = (y.size - 1 if scen is Scenario.FILTER else y.size) if n is None else int(n)
    F = transition_matrix(model, grid) if trans is None else trans
    x = grid.nodes
    lv = log_v(v, x)
    shift = float(lv.max())
    Dlo, Dhi = profile.D
    inD = (x >= Dlo) & (x <= Dhi)
    if not inD.any():
        raise DomainError("no grid node falls inside D; refine the grid")
    F_DD = F[np.ix_(inD, inD)]
    FV = F @ np.exp(lv - shift)  # used by the prediction kernel
    log_ups = np.empty(n)
    log_psi = np.empty(n)
    y_env = np.empty(n)
    in_K = np.empty(n, dtype=bool)
    ylo, yhi = profile.K_set
    for k in range(n):
        yk = y[k + 1] if scen is Scenario.FILTER else y[k]
        lg = log_obs_density(model, x, yk)
        with np.errstate(divide="ignore"):
            if scen is Scenario.FILTER:
                s2 = float(np.max(lg + lv))
                rows = np.log(F @ np.exp(lg + lv - s2)) + s2 - lv
                psi_k = float(np.min(F_DD @ np.exp(lg[inD])))
            else:
                rows = lg + np.log(FV) + shift - lv
                psi_k = float(np.min(np.exp(lg[inD]) * F_DD.sum(axis=1)))
        log_ups[k] = float(np.max(rows))
        log_psi[k] = math.log(psi_k) if psi_k > 0 else -math.inf
        in_K[k] = ylo <= yk <= yhi
        y_env[k] = yk
    log_Z = np.maximum(log_ups, 0.0) - np.minimum(log_psi, 0.0)
    Cd, log_T = _log_T(model, profile, d, y_env)
    return EnvStats(log_ups, log_psi, log_Z, in_K, log_T, float(d), Cd, (Dlo, Dhi), y_env)


def _log_T(model, profile, d, y_env):
    # T_d = 1 ^ eps^-_{C_d}(y) mu_{C_d}(C_d n D)
    Dlo, Dhi = profile.D
    Cd = profile.C_of(d)
    ld = ld_constants(model, Cd, profile.K_set)
    log_mu = math.log((min(Dhi, Cd[1]) - max(Dlo, Cd[0])) / (Cd[1] - Cd[0]))
    log_T = np.array([min(0.0, ld.log_eps_minus(y) + log_mu) for y in y_env])
    return Cd, log_T


# ---------------------------------------------------------------------------
# constants of the exponential rate


@dataclass(frozen=True)
class TheoremConstants:
    gamma_minus: float
    gamma_plus: float
    beta: float
    d: float
    rho_Cd: float
    log_one_minus_rho_Cd: float
    log_one_minus_lower: float
    log_one_minus_rho: float
    l_hat: float
    gamma_hat: float

    @property
    def rho(self) -> float:
        return 1.0 - math.exp(self.log_one_minus_rho)

    @property
    def log_rho(self) -> float:
        return math.log1p(-math.exp(self.log_one_minus_rho))

    @property
    def frequency_threshold(self) -> float:
        """Lower bound required of n^-1 I_{0,n-1} for the finite-n bound to apply."""
        return max(1.0 - self.gamma_minus, 0.5 * (1.0 + self.gamma_plus))

    def check(self) -> dict:
        """Direct substitution into the two defining inequalities."""
        return {
            "gamma_order": 0 <= self.gamma_minus < self.beta < self.gamma_plus <= 1,
            "frequency": self.gamma_hat > self.frequency_threshold,
            "d_condition": self.d * (self.gamma_plus - self.beta) / 2 > 2 * self.l_hat,
            "rho_condition": self.log_one_minus_rho < self.log_one_minus_lower,
        }

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["rho"] = self.rho
        return out


def _rho_parts(rho_Cd) -> tuple[float, float]:
    if hasattr(rho_Cd, "log_one_minus_rho_Cd"):
        return rho_Cd.rho_Cd, rho_Cd.log_one_minus_rho_Cd
    r = float(rho_Cd)
    if not 0 <= r < 1:
        raise DomainError("rho_Cd must lie in [0, 1)")
    return r, math.log1p(-r)


def _log_one_minus_pow(log1m: float, p: float) -> float:
    # log(1 - (1 - e^log1m)^p)
    if log1m < -30:
        return math.log(p) + log1m
    one_minus = math.exp(log1m)
    if one_minus >= 1.0:  # rho_Cd = 0
        return 0.0
    return math.log(-math.expm1(p * math.log1p(-one_minus)))


def theorem_constants(l_hat: float, gamma_hat: float, rho_Cd, d_under: float,
                      eps: float = 0.1) -> TheoremConstants:
    """Deterministic feasible (gamma-, gamma+, beta, d, rho).

    ``rho_Cd`` is a number in [0, 1), an object carrying ``rho_Cd`` and
    ``log_one_minus_rho_Cd`` (e.g. an :class:`LDReport`), or a callable
    mapping d to either; the callable form evaluates rho at the chosen d.
    """
    if not gamma_hat > 2.0 / 3.0:
        raise GammaTooSmall(f"gamma_hat = {gamma_hat:.6g} <= 2/3; enlarge the observation set")
    slack = 3.0 * gamma_hat - 2.0
    g_minus = (1.0 - gamma_hat) + 0.1 * slack
    g_plus = (2.0 * gamma_hat - 1.0) - 0.1 * slack
    beta = 0.5 * (g_minus + g_plus)
    d = max(float(d_under), (4.0 * l_hat + eps) / (g_plus - beta))
    rho_val, log1m = _rho_parts(rho_Cd(d) if callable(rho_Cd) else rho_Cd)
    a = _log_one_minus_pow(log1m, beta - g_minus)
    log_b = -d * (g_plus - beta) / 2.0 + 2.0 * l_hat
    b = math.log(-math.expm1(log_b)) if log_b < 0 else -math.inf
    log1m_lower = min(a, b)
    return TheoremConstants(g_minus, g_plus, beta, d, rho_val, log1m, log1m_lower,
                            log1m_lower - math.log(2.0), l_hat, gamma_hat)


# ---------------------------------------------------------------------------
# conditions on the nonlinear model


def check_E_conditions(model: ModelSpec, sample_radius: float = 1e3, rungs: int = 16) -> dict:
    """Numerical report on the drift (E1), noise (E2) and observation growth (E3) conditions.

    E1: sup_{|x| >= r} (|x + b(x)| - |x|) on a log-spaced ladder of r must
    decrease strictly and end below its start.  E3: |x|^-1 log|h(x)| is
    evaluated on the ladder; the limsup estimate is its value at the last
    finite rung; it passes when finite and not growing with the radius.
    """
    radii = np.logspace(0.0, math.log10(sample_radius), rungs)
    probe = np.logspace(0.0, math.log10(sample_radius) + 0.5, 4000)
    probe = np.concatenate([-probe[::-1], probe])
    with np.errstate(over="ignore", invalid="ignore"):
        drift = np.abs(model.trans_mean(probe)) - np.abs(probe)
        ladder = np.array([np.max(drift[np.abs(probe) >= r]) for r in radii])
        hx = np.abs(model.obs_mean(probe))
        bx = np.asarray(model.trans_mean(probe)) - probe
    locally_bounded = bool(np.all(np.isfinite(bx)) and np.all(np.isfinite(hx)))
    e1 = bool(locally_bounded and np.all(np.diff(ladder) < 0) and ladder[-1] < ladder[0])

    e2 = bool(0 < model.trans_sd < math.inf)

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        growth = np.fmax(np.log(np.abs(model.obs_mean(radii))) / radii,
                         np.log(np.abs(model.obs_mean(-radii))) / radii)
    # rungs where h overflows double precision carry no information
    finite = np.isfinite(growth)
    if finite.sum() >= 2:
        g = growth[finite]
        limsup = float(g[-1])
        mid = float(g[g.size // 2])
        e3 = bool(limsup <= 2.0 * max(mid, 1.0))
    else:
        limsup, e3 = math.inf, False
    return {
        "E1": {"pass": e1, "radii": radii.tolist(), "sup_drift": ladder.tolist(),
               "locally_bounded": locally_bounded},
        "E2": {"pass": e2, "sigma": model.trans_sd},
        "E3": {"pass": e3, "growth": growth.tolist(), "limsup_estimate": limsup,
               "finite_rungs": int(finite.sum())},
        "pass": e1 and e2 and e3,
    }
