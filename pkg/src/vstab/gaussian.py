"""Closed-form Kalman recursion for the scalar linear model, and Gaussian V-moments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp

from .exceptions import DomainError
from .measure import WeightSpec


@dataclass(frozen=True)
class GaussianState:
    mean: float
    var: float

    def __post_init__(self):
        if not (self.var > 0 and np.isfinite(self.var)):
            raise ValueError("variance must be positive and finite")


def stationary_pi(alpha: float) -> GaussianState:
    """Invariant law N(0, 1 / (1 - alpha^2)) of X[k+1] = alpha X[k] + V[k]."""
    if not abs(alpha) < 1:
        raise DomainError(f"|alpha| must be < 1, got {alpha}")
    return GaussianState(0.0, 1.0 / (1.0 - alpha * alpha))


def kalman_predict(state: GaussianState, alpha: float) -> GaussianState:
    return GaussianState(alpha * state.mean, alpha * alpha * state.var + 1.0)


def kalman_update(pred: GaussianState, y: float, beta_obs: float) -> tuple[GaussianState, float]:
    """Condition N(m, v) on y = x + beta_obs W; also return log N(y; m, v + beta_obs^2)."""
    r = beta_obs * beta_obs
    s = pred.var + r
    mean = (pred.var * y + r * pred.mean) / s
    var = pred.var * r / s
    loglik = -0.5 * (math.log(2.0 * math.pi * s) + (y - pred.mean) ** 2 / s)
    return GaussianState(mean, var), loglik


def kalman_step(prior: GaussianState, y: float, alpha: float,
                beta_obs: float) -> tuple[GaussianState, float]:
    """Predict one step through the AR(1) transition, then update on y."""
    return kalman_update(kalman_predict(prior, alpha), y, beta_obs)


def kalman_filter(prior: GaussianState, ys, alpha: float, beta_obs: float):
    """Filtering laws for Y[0..n]: update-only at k = 0, predict-then-update after.

    Returns (states, loglik_increments), each of length len(ys).
    """
    states, incs = [], []
    state, inc = kalman_update(prior, float(ys[0]), beta_obs)
    states.append(state)
    incs.append(inc)
    for y in ys[1:]:
        state, inc = kalman_step(state, float(y), alpha, beta_obs)
        states.append(state)
        incs.append(inc)
    return states, np.array(incs)


def log_gaussian_v_moment(s: GaussianState, v: WeightSpec) -> float:
    mu, var, c = s.mean, s.var, v.c
    if v.family == "exp_abs":
        sd = math.sqrt(var)
        # E exp(c|Z|) = exp(c^2 var / 2) [e^{c mu} Phi(mu/sd + c sd) + e^{-c mu} Phi(-mu/sd + c sd)]
        terms = [c * mu + log_ndtr(mu / sd + c * sd), -c * mu + log_ndtr(-mu / sd + c * sd)]
        return 0.5 * c * c * var + float(logsumexp(terms))
    if c * var >= 1.0:
        return math.inf
    one_minus = 1.0 - c * var
    return -0.5 * math.log(one_minus) + c * mu * mu / (2.0 * one_minus)


def gaussian_v_moment(s: GaussianState, v: WeightSpec) -> float:
    """E V(Z) for Z ~ N(mean, var); +inf for the Gaussian-tail weight when c var >= 1."""
    with np.errstate(over="ignore"):
        return float(np.exp(log_gaussian_v_moment(s, v)))
