import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epipolar_ihls.exceptions import InvalidInputError
from epipolar_ihls.robust_loss import RobustParams, optimal_beta, psi_majorizer, rho, weighted_rho

TINY = 1e-30


def test_rho_examples():
    assert rho([0.0], RobustParams(0.5, 1.0)) == 1.0
    assert rho([3.0, 4.0], RobustParams(1.0, TINY)) == pytest.approx(7.0, rel=1e-6)
    assert rho([1.0, 1.0, 1.0], RobustParams(2.0, TINY)) == pytest.approx(3.0, rel=1e-6)


def test_weighted_rho_examples():
    r = np.array([0.3, -2.0, 5.0])
    params = RobustParams(0.5, 1e-3)
    assert weighted_rho(r, np.ones(3), params) == rho(r, params)
    assert weighted_rho(r, np.zeros(3), params) == pytest.approx(3 * 1e-3**0.25)
    assert weighted_rho([3.0], [2.0], RobustParams(1.0, TINY)) == pytest.approx(6.0, rel=1e-6)
    with pytest.raises(InvalidInputError):
        weighted_rho(r, [1.0, -1.0, 1.0], params)


def test_psi_examples():
    params = RobustParams(1.0, TINY)
    assert psi_majorizer([1.0], [2.0], params) == pytest.approx(1.25, rel=1e-12)
    with pytest.raises(InvalidInputError):
        psi_majorizer([1.0], [0.0], params)


def test_optimal_beta_examples():
    np.testing.assert_allclose(optimal_beta(np.zeros(4), 0.25), 0.5)
    np.testing.assert_allclose(optimal_beta([3.0], 16.0), [5.0])
    with pytest.raises(InvalidInputError):
        optimal_beta([1.0], 0.0)


def test_params_validation():
    for p, eps in [(0.0, 1e-6), (-1.0, 1e-6), (2.5, 1e-6), (0.5, 0.0), (0.5, np.nan)]:
        with pytest.raises(InvalidInputError):
            RobustParams(p, eps)


def test_optimal_beta_minimizes_psi():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        f = rng.normal(size=5)
        params = RobustParams(rng.uniform(0.05, 1.0), 10.0 ** rng.uniform(-6, 0))
        b = optimal_beta(f, params.eps)
        b2 = b * np.exp(rng.normal(scale=0.5, size=5))
        assert psi_majorizer(f, b, params) <= psi_majorizer(f, b2, params) * (1 + 1e-12)


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8),
    st.floats(0.01, 1.0),
    st.floats(1e-8, 10.0),
)
def test_majorizer_tight_and_bounding(f, p, eps):
    params = RobustParams(p, eps)
    f = np.array(f)
    b = optimal_beta(f, eps)
    assert psi_majorizer(f, b, params) == pytest.approx(rho(f, params), rel=1e-12)
    assert psi_majorizer(f, 2.0 * b, params) >= rho(f, params) * (1 - 1e-12)
    assert psi_majorizer(f, 0.5 * b, params) >= rho(f, params) * (1 - 1e-12)


def test_beta_gradient_factor_vanishes():
    f = np.array([0.1, -3.0, 7.0])
    b = optimal_beta(f, 1e-2)
    np.testing.assert_allclose(f * f + 1e-2 - b * b, 0.0, atol=1e-13)


def test_monotonicity():
    params = RobustParams(0.5, 1e-3)
    assert rho([1.0, 2.0], params) <= rho([1.0, 2.5], params)
    assert rho([1.0, 2.0], params) <= rho([1.0, 2.0], RobustParams(0.5, 1e-2))
