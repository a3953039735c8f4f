import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from vstab.assumptions import (admissible_c_range, check_drift, check_E_conditions,
                               drift_profile, drift_ratio, env_stats, kappa, ld_constants,
                               ld_spot_check, psi_gauss, theorem_constants)
from vstab.exceptions import DomainError, GammaTooSmall, KappaNonpositive
from vstab.experiments import observation_sd
from vstab.measure import Grid, WeightSpec
from vstab.models import Fn, ModelSpec, Scenario, simulate

NONLIN = ModelSpec.nonlinear(Fn("linear", (-0.5,)), 1.0, Fn("identity"))


# -- kappa and psi -----------------------------------------------------------

def test_kappa_examples():
    assert kappa(0.5, 1.5) == 5.0
    assert kappa(0.9, 1.1) == pytest.approx(1 + 1.1 / 0.81 - 1 / 0.9, rel=1e-15)
    assert kappa(0.9, 1.1) == pytest.approx(1.247, abs=5e-4)


def test_psi_example():
    # psi(0, 1) = 0.5 * (1/(2-c) - 1) - (log 2pi + log(2-c)) / 2 at c = 1.5
    assert psi_gauss(0.5, 1.5, 0.0, 1.0) == pytest.approx(0.5 - (math.log(2 * math.pi) + math.log(0.5)) / 2)
    assert psi_gauss(0.5, 1.5, 0.0, 1.0) == pytest.approx(-0.0724, abs=5e-5)
    prof = drift_profile(ModelSpec.linear(0.5), WeightSpec("exp_square", 1.5), (-1, 1))
    assert prof.W(0.0) == pytest.approx(0.0724, abs=5e-5)


def test_psi_matches_the_displayed_unit_noise_formula():
    a, c = 0.7, 1.3
    k = kappa(a, c)
    for x, y in [(0.3, -1.2), (2.0, 0.5), (-1.5, 2.5)]:
        ref = (-k * a * a * x * x / 2 + a * x * y / (2 - c) + y * y / 2 * (1 / (2 - c) - 1)
               - (math.log(2 * math.pi) + math.log(2 - c)) / 2)
        assert psi_gauss(a, c, x, y) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("alpha,c,x,y,beta", [(0.5, 1.5, 0.7, 0.4, 1.0), (0.9, 1.1, -2.0, 1.0, 1.0),
                                                (0.6, 1.2, 1.1, -0.3, 0.8)])
def test_psi_is_the_log_drift_ratio(alpha, c, x, y, beta):
    # closed form against quadrature of f g V / V
    m = ModelSpec.linear(alpha, beta)
    r = drift_ratio(m, WeightSpec("exp_square", c), x, y)
    assert math.log(r) == pytest.approx(float(psi_gauss(alpha, c, x, y, beta)), abs=1e-10)


def test_kappa_nonpositive_reports_range():
    with pytest.raises(KappaNonpositive) as exc:
        drift_profile(ModelSpec.linear(0.9), WeightSpec("exp_square", 1.99), (-1, 1))
    lo, hi = exc.value.c_range
    assert 0 < lo < hi < 2
    assert kappa(0.9, 0.5 * (lo + hi)) > 0
    lo, hi = admissible_c_range(0.5)
    assert lo < 1.5 < hi


def test_square_weight_needs_linear_model():
    with pytest.raises(DomainError):
        drift_profile(NONLIN, WeightSpec("exp_square", 1.0), (-1, 1))


# -- LD constants ------------------------------------------------------------

def test_ld_constants_against_grid_extremization():
    m = ModelSpec.linear(0.5)
    rep = ld_constants(m, 2.0, (-2.0, 2.0))
    xs = np.linspace(-2, 2, 400)
    F = stats.norm.pdf(xs[None, :], 0.5 * xs[:, None], 1.0) * 4.0
    # corners of the box are on the grid (exact inf); the sup sits on x' = alpha x,
    # which the grid brackets from below to O(h^2)
    assert rep.eps_minus_tilde == pytest.approx(F.min(), rel=1e-10)
    assert F.max() <= rep.eps_plus_tilde <= F.max() * (1 + 1e-4)
    ys = np.linspace(-2, 2, 401)
    G = stats.norm.pdf(ys[:, None], xs[None, :], 1.0)
    ratio = (F.min() * G.min(axis=1)) / (F.max() * G.max(axis=1))
    assert rep.rho_Cd == pytest.approx(1 - ratio.min() ** 2, rel=1e-6)
    assert 0 < rep.rho_Cd < 1
    assert rep.eps_minus(0.3) == pytest.approx(F.min() * stats.norm.pdf(0.3, -2.0, 1.0), rel=1e-10)
    assert rep.eps_plus(0.3) == pytest.approx(F.max() * stats.norm.pdf(0.0, 0.0, 1.0), rel=1e-4)


def test_ld_degenerate_set_and_perfect_mixing():
    flat = ModelSpec.nonlinear(Fn("zero"), 1.0, Fn("zero"))
    rep = ld_constants(flat, 1e-7, (-2, 2))
    assert rep.eps_minus_tilde / rep.eps_plus_tilde == pytest.approx(1.0, abs=1e-12)
    assert rep.rho_Cd < 1e-12
    with pytest.raises(DomainError):
        ld_constants(flat, 0.0, (-2, 2))


def test_ld_sandwich_spot_checks():
    for model, r in [(ModelSpec.linear(0.5), 2.0), (NONLIN, 3.0)]:
        rep = ld_constants(model, r, (-3, 3))
        lo, up = ld_spot_check(model, rep, n=1000, seed=3)
        assert lo.all() and up.all()
    assert rep.mu_C((0.0, 10.0)) == pytest.approx(0.5)
    assert rep.mu_C_measure().is_probability()


# -- drift ---------------------------------------------------------------------

def test_nonlinear_drift_formula():
    prof = drift_profile(NONLIN, WeightSpec("exp_abs", 1.0), (-4, 4))
    M = 2 * math.exp(0.5)
    assert prof.M_const == pytest.approx(M)
    const = math.log(M) - 0.5 * math.log(2 * math.pi)
    x = np.array([-3.0, 0.2, 5.0])
    np.testing.assert_allclose(prof.psi(x), -0.5 * np.abs(x) + const)
    assert prof.d_under == pytest.approx(0.5 - const)
    lo, hi = prof.D
    assert lo <= -1 + 1e-9 and hi >= 1 - 1e-9
    lo, hi = prof.C_of(3.0)
    assert hi == pytest.approx(2 * (3.0 + const), rel=1e-10)
    assert prof.log_V_of(3.0) == pytest.approx(hi, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 20.0), st.floats(0.0, 20.0))
def test_sublevel_sets_are_nested(d, extra):
    prof = drift_profile(ModelSpec.linear(0.5), WeightSpec("exp_square", 1.5), (-2, 2))
    d = prof.d_under + d
    a, b = prof.C_of(d), prof.C_of(d + extra)
    assert b[0] <= a[0] + 1e-9 and a[1] <= b[1] + 1e-9
    assert prof.W(np.array(a)) == pytest.approx([d, d], abs=1e-8)


@pytest.mark.parametrize("model,v,ybar", [
    (ModelSpec.linear(0.5), WeightSpec("exp_square", 1.5), 3.0),
    (ModelSpec.linear(0.9), WeightSpec("exp_square", 1.1), 3.0),
    (NONLIN, WeightSpec("exp_abs", 1.0), 4.5),
])
def test_drift_inequality_off_the_sublevel_set(model, v, ybar):
    prof = drift_profile(model, v, ybar)
    x, y, ratio, bound = check_drift(model, v, prof, prof.d_under, n=150, seed=1)
    assert np.all(ratio <= bound + 1e-9)


# -- environment statistics -----------------------------------------------------

@pytest.fixture(scope="module")
def env_linear():
    m = ModelSpec.linear(0.5)
    v = WeightSpec("exp_square", 1.5)
    ybar = 3 * observation_sd(m)
    prof = drift_profile(m, v, ybar)
    _, path = simulate(m, 10_001, 11)
    return m, prof, env_stats(m, Scenario.FILTER, path, v, prof, prof.d_under + 1,
                              Grid.symmetric(16, 400)), path, ybar


def test_env_invariants(env_linear):
    m, prof, env, path, ybar = env_linear
    assert env.n == 10_000
    assert np.all(env.log_Z >= 0) and env.l_hat >= 0
    assert np.all(env.log_T <= 0) and np.all(np.isfinite(env.log_T))
    assert env.I(0, env.n - 1) == int(env.in_K.sum())
    assert env.I(5, 4) == 0 and 0 <= env.I(10, 19) <= 10
    # filter kernels read Y[k+1]
    np.testing.assert_array_equal(env.in_K, np.abs(path.y[1:]) <= ybar)


def test_gamma_hat_for_three_sd(env_linear):
    # P(|Y| <= 3 sd) = 0.9973 under the stationary law
    assert env_linear[2].gamma_hat > 0.99


def test_birkhoff_halves_agree(env_linear):
    env = env_linear[2]
    n = env.n
    for seq in (env.log_Z, env.in_K.astype(float)):
        a, b = seq[: n // 2].mean(), seq[n // 2:].mean()
        band = 2.0 * seq.std() / math.sqrt(n)  # sd of the difference of two independent half means
        assert abs(a - b) <= 4 * band + 1e-12


def test_whole_line_observation_set_counts_every_step():
    m = ModelSpec.linear(0.5)
    v = WeightSpec("exp_abs", 1.0)
    prof = drift_profile(m, v, 1e6)
    _, path = simulate(m, 51, 2)
    env = env_stats(m, Scenario.PREDICTION, path, v, prof, prof.d_under, Grid.symmetric(10, 200))
    assert env.I(0, env.n - 1) == env.n == 51


def test_unit_environment_gives_unit_z():
    from vstab.assumptions import EnvStats
    z = np.zeros(4)
    env = EnvStats(z, z, np.maximum(z, 0) - np.minimum(z, 0), np.ones(4, bool), z, 1.0, (-1, 1), (-1, 1))
    np.testing.assert_array_equal(env.Z, 1.0)
    np.testing.assert_allclose(env.xi, 0.0)


# -- theorem constants ------------------------------------------------------------

def test_theorem_constants_example():
    tc = theorem_constants(0.5, 0.9, 0.3, 1.0)
    assert tc.gamma_minus == pytest.approx(0.17)
    assert tc.gamma_plus == pytest.approx(0.73)
    assert max(1 - 0.2, (1 + 0.7) / 2) < 0.9  # the hand-picked pair is feasible too
    assert tc.frequency_threshold < 0.9
    assert all(tc.check().values())


def test_gamma_too_small():
    with pytest.raises(GammaTooSmall):
        theorem_constants(0.0, 0.6, 0.5, 1.0)
    with pytest.raises(GammaTooSmall):
        theorem_constants(0.0, 2 / 3, 0.5, 1.0)


def test_zero_l_hat_degenerate_case():
    tc = theorem_constants(0.0, 0.95, 0.4, 2.0, eps=0.0)
    assert tc.d == 2.0
    lower = 0.4 ** (tc.beta - tc.gamma_minus)
    assert tc.rho > lower and tc.rho - lower < 1.0


def test_rho_callable_is_evaluated_at_chosen_d():
    seen = []

    def rho(d):
        seen.append(d)
        return 0.5
    tc = theorem_constants(1.0, 0.9, rho, 0.1)
    assert seen == [tc.d]


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 80.0), st.floats(0.67, 1.0), st.floats(0.0, 0.999999), st.floats(0.0, 50.0))
def test_constants_satisfy_both_inequalities(l_hat, gamma_hat, rho_cd, d_under):
    tc = theorem_constants(l_hat, gamma_hat, rho_cd, d_under)
    assert 0 < tc.gamma_minus < tc.beta < tc.gamma_plus < 1
    assert gamma_hat > max(1 - tc.gamma_minus, (1 + tc.gamma_plus) / 2)
    assert tc.d >= d_under
    assert tc.d * (tc.gamma_plus - tc.beta) / 2 > 2 * l_hat
    # rho > rho_Cd^(beta - gamma-) v exp(-d(gamma+ - beta)/2 + 2 l)
    a = rho_cd ** (tc.beta - tc.gamma_minus)
    b = math.exp(-tc.d * (tc.gamma_plus - tc.beta) / 2 + 2 * l_hat)
    assert tc.log_one_minus_rho < math.log1p(-max(a, b)) if max(a, b) < 1 else True
    assert 0 < tc.rho <= 1 and tc.log_one_minus_rho < 0
    assert all(tc.check().values())


# -- (E1)-(E3) -----------------------------------------------------------------------

def test_e_conditions_contracting_model():
    rep = check_E_conditions(NONLIN)
    assert rep["pass"] and rep["E1"]["pass"] and rep["E2"]["pass"] and rep["E3"]["pass"]
    # exact ladder: sup_{|x| >= r} (|0.5 x| - |x|) = -r/2
    np.testing.assert_allclose(rep["E1"]["sup_drift"], -np.array(rep["E1"]["radii"]) / 2, rtol=1e-2)
    assert 0 <= rep["E3"]["limsup_estimate"] < math.log(1e3) / 1e3 + 1e-12


def test_e1_fails_for_explosive_drift():
    rep = check_E_conditions(ModelSpec.nonlinear(Fn("linear", (1.0,)), 1.0, Fn("identity")))
    assert not rep["E1"]["pass"] and not rep["pass"]


def test_e3_fails_for_super_exponential_observation():
    rep = check_E_conditions(ModelSpec.nonlinear(Fn("linear", (-0.5,)), 1.0, Fn("cubic", (1.0,))))
    assert rep["E3"]["pass"]  # log|x^3| / |x| -> 0
    rep = check_E_conditions(ModelSpec.nonlinear(Fn("linear", (-0.5,)), 1.0, Fn("exp", (1.0,))))
    assert rep["E3"]["limsup_estimate"] == pytest.approx(1.0, abs=1e-6)
