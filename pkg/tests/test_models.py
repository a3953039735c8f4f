import math

import numpy as np
import pytest
from scipy import stats

from vstab.measure import Grid
from vstab.models import (Fn, ModelSpec, ObservationPath, Scenario, obs_density, q_kernel,
                          simulate, transition_density, transition_matrix)


def test_fn_library_and_roundtrip():
    x = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_allclose(Fn("linear_sin", (0.5, 2.0))(x), 0.5 * x + 2 * np.sin(x))
    np.testing.assert_allclose(Fn("affine", (1.0, -0.5))(x), 1 - 0.5 * x)
    f = Fn("tanh", (3.0,))
    assert Fn.from_dict(f.to_dict()) == f
    with pytest.raises(ValueError):
        Fn("linear")
    with pytest.raises(ValueError):
        Fn("bogus")


def test_model_roundtrip_and_validation():
    lin = ModelSpec.linear(0.5, 2.0)
    assert ModelSpec.from_dict(lin.to_dict()) == lin
    nl = ModelSpec.nonlinear(Fn("linear", (-0.5,)), 1.3, Fn("identity"))
    back = ModelSpec.from_dict(nl.to_dict())
    assert back.to_dict() == nl.to_dict()
    with pytest.raises(ValueError):
        ModelSpec.linear(1.0)
    with pytest.raises(ValueError):
        ModelSpec.linear(0.5, 0.0)
    with pytest.raises(TypeError):
        ModelSpec.nonlinear(lambda x: -x, 1.0, Fn("identity")).to_dict()


def test_densities_match_scipy():
    m = ModelSpec.nonlinear(Fn("linear", (-0.5,)), 1.7, Fn("cubic", (0.1,)), beta_obs=0.6)
    assert transition_density(m, 2.0, 0.3) == pytest.approx(stats.norm.pdf(0.3, 1.0, 1.7), rel=1e-13)
    assert obs_density(m, 2.0, 0.3) == pytest.approx(stats.norm.pdf(0.3, 0.8, 0.6), rel=1e-13)
    assert m.g_max == pytest.approx(stats.norm.pdf(0, 0, 0.6))


def test_transition_rows_sum_to_one_inside_window():
    g = Grid.symmetric(12, 1200)
    F = transition_matrix(ModelSpec.linear(0.9), g)
    inner = np.abs(g.nodes) < 5
    np.testing.assert_allclose(F.sum(axis=1)[inner], 1.0, rtol=1e-10)


def test_q_kernel_factorization():
    g = Grid.symmetric(6, 200)
    m = ModelSpec.linear(0.5)
    F = transition_matrix(m, g)
    kf = q_kernel(m, Scenario.FILTER, 0.3, -0.4, g)
    kp = q_kernel(m, Scenario.PREDICTION, 0.3, -0.4, g)
    np.testing.assert_allclose(kf.density, F * obs_density(m, g.nodes, -0.4)[None, :])
    np.testing.assert_allclose(kp.density, obs_density(m, g.nodes, 0.3)[:, None] * F)


def test_simulate_is_deterministic_in_the_seed():
    m = ModelSpec.linear(0.5)
    x1, p1 = simulate(m, 100, 7)
    x2, p2 = simulate(m, 100, 7)
    _, p3 = simulate(m, 100, 8)
    assert np.array_equal(p1.y, p2.y) and np.array_equal(x1, x2)
    assert not np.array_equal(p1.y, p3.y)
    assert p1.origin == "simulated" and p1.seed == 7 and p1.model == m.to_dict()


def test_linear_simulation_is_stationary():
    # Var X = 1/(1 - alpha^2) = 4/3 and Var Y = 7/3 for alpha = 0.5
    x, p = simulate(ModelSpec.linear(0.5), 100_000, 1)
    assert np.var(x) == pytest.approx(4 / 3, rel=0.03)
    assert np.var(p.y) == pytest.approx(7 / 3, rel=0.03)


def test_observation_path_validation():
    with pytest.raises(ValueError):
        ObservationPath(np.array([1.0, np.inf]))
    with pytest.raises(ValueError):
        ObservationPath(np.array([1.0]), origin="other")
    assert len(ObservationPath([1, 2, 3])) == 3


def test_nonlinear_burn_in_uses_fn():
    m = ModelSpec.nonlinear(Fn("linear", (-0.5,)), 1.0, Fn("identity"))
    x, p = simulate(m, 50_000, 3, burn_in=100)
    assert np.var(x) == pytest.approx(4 / 3, rel=0.04)
    assert math.isfinite(p.y.sum())
