import warnings

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from epipolar_ihls.exceptions import ConfigError, InvalidInputError, UnderdeterminedError
from epipolar_ihls.geometry import build_observation_matrix, epipolar_residual, f_distance, normalize
from epipolar_ihls.ihls import (
    IhlsConfig,
    beta_step,
    eight_point,
    f_step,
    gamma_matrix,
    ihls_solve,
    least_squares_vector,
    solve_fundamental,
    to_normalized_vector,
)
from epipolar_ihls.metrics import sampson_distance
from epipolar_ihls.numerics import smallest_eigenpair
from epipolar_ihls.robust_loss import RobustParams, optimal_beta, psi_majorizer, rho
from epipolar_ihls.synth import SceneConfig, generate_scene, oracle_weights


def normalized_A(scene):
    normed, T, Tp = normalize(scene.correspondences)
    return build_observation_matrix(normed), T, Tp


def test_gamma_matrix_examples():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(12, 9))
    np.testing.assert_allclose(gamma_matrix(A, np.ones(12), 0.5), A.T @ A, atol=1e-12)
    np.testing.assert_allclose(gamma_matrix(A, rng.uniform(0.1, 3, 12), 2.0), A.T @ A, atol=1e-12)
    a = A[:1]
    np.testing.assert_allclose(gamma_matrix(a, [2.0], 0.5), 2.0**-1.5 * a.T @ a, rtol=1e-12)
    with pytest.raises(InvalidInputError):
        gamma_matrix(A, np.zeros(12), 0.5)


def test_beta_step_examples():
    scene = generate_scene(SceneConfig(noise_px=0.0, n_points=20))
    A, T, Tp = normalized_A(scene)
    f = to_normalized_vector(scene.f_gt, T, Tp)
    np.testing.assert_allclose(beta_step(A, f, 1e-4), 1e-2, rtol=1e-9)
    row = np.zeros((1, 9))
    row[0, 0] = 3.0
    np.testing.assert_allclose(beta_step(row, np.eye(9)[0], 16.0), [5.0])


def test_beta_step_golden_section_oracle():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(10, 9))
    f = rng.normal(size=9)
    f /= np.linalg.norm(f)
    params = RobustParams(0.5, 1e-2)
    beta = beta_step(A, f, params.eps)
    r = A @ f
    for n in range(10):
        phi_n = lambda b: psi_majorizer(r[n : n + 1], [b], params)  # noqa: E731
        res = minimize_scalar(phi_n, bracket=(1e-3, 1.0, 100.0), method="golden", tol=1e-10)
        assert res.x == pytest.approx(beta[n], rel=1e-6)


def test_f_step_examples():
    G = np.diag(np.arange(1.0, 10.0))
    e1 = np.eye(9)[0]
    np.testing.assert_array_equal(f_step(G, -e1), -e1)
    rng = np.random.default_rng(2)
    B = rng.normal(size=(20, 9))
    G = B.T @ B
    f = f_step(G, e1)
    q = f @ G @ f
    for _ in range(1000):
        u = rng.normal(size=9)
        u /= np.linalg.norm(u)
        assert u @ G @ u >= q - 1e-12


def test_f_step_noise_free_eigen_residual():
    scene = generate_scene(SceneConfig(noise_px=0.0, seed=4))
    A, _, _ = normalized_A(scene)
    f0 = least_squares_vector(A)
    G = gamma_matrix(A, beta_step(A, f0, 1e-6), 0.5)
    f = f_step(G, f0)
    lam = f @ G @ f
    assert np.abs(G @ f - lam * f).max() < 1e-10 * np.abs(G).max()


def test_p2_single_iteration():
    scene = generate_scene(SceneConfig(noise_px=1.0, outlier_fraction=0.3, seed=1))
    A, _, _ = normalized_A(scene)
    rng = np.random.default_rng(0)
    f0 = rng.normal(size=9)
    res = ihls_solve(A, IhlsConfig.make(p=2.0), f0=f0 / np.linalg.norm(f0))
    assert res.iterations == 1
    assert res.converged
    u = least_squares_vector(A)
    assert min(np.linalg.norm(res.f_star - u), np.linalg.norm(res.f_star + u)) < 1e-12


def test_noise_free_solution():
    scene = generate_scene(SceneConfig(n_points=50, noise_px=0.0, seed=2))
    A, T, Tp = normalized_A(scene)
    config = IhlsConfig()
    res = ihls_solve(A, config)
    eps, p = config.params.eps, config.params.p
    assert rho(A @ res.f_star, config.params) == pytest.approx(50 * eps ** (p / 2), abs=1e-9)
    f_gt = to_normalized_vector(scene.f_gt, T, Tp)
    assert abs(res.f_star @ f_gt) > 1 - 1e-8
    assert abs(np.linalg.norm(res.f_star) - 1.0) < 1e-12
    np.testing.assert_allclose(res.beta_star, optimal_beta(A @ res.f_star, eps), rtol=1e-12)


def test_contaminated_beats_least_squares_on_inliers():
    ihls_err, ls_err = [], []
    for seed in range(100):
        scene = generate_scene(SceneConfig(n_points=200, noise_px=1.0, outlier_fraction=0.4, seed=seed))
        c = scene.correspondences
        m = scene.inlier_mask
        F, _ = solve_fundamental(c)
        ihls_err.append(np.mean(sampson_distance(F, c.x[m], c.xp[m])))
        ls_err.append(np.mean(sampson_distance(eight_point(c), c.x[m], c.xp[m])))
    assert np.mean(ihls_err) < np.mean(ls_err)


def test_descent_per_half_step():
    scene = generate_scene(SceneConfig(n_points=100, noise_px=1.0, outlier_fraction=0.3, seed=6))
    A, _, _ = normalized_A(scene)
    params = RobustParams(0.5, 1e-6)
    f = least_squares_vector(A)
    beta = np.ones(len(A))
    for _ in range(30):
        phi0 = psi_majorizer(A @ f, beta, params)
        beta = beta_step(A, f, params.eps)
        phi1 = psi_majorizer(A @ f, beta, params)
        f = smallest_eigenpair(gamma_matrix(A, beta, params.p), reference=f).vector
        phi2 = psi_majorizer(A @ f, beta, params)
        assert phi1 <= phi0 * (1 + 1e-12)
        assert phi2 <= phi1 * (1 + 1e-12)


def test_objective_trace_nonincreasing_and_fixed_point():
    scene = generate_scene(SceneConfig(n_points=200, outlier_fraction=0.4, seed=3))
    A, _, _ = normalized_A(scene)
    config = IhlsConfig(max_iters=2000)
    res = ihls_solve(A, config)
    trace = np.array(res.objective_trace)
    assert np.all(np.diff(trace) <= 1e-12 * np.abs(trace[1:]))
    G = gamma_matrix(A, optimal_beta(A @ res.f_star, config.params.eps), config.params.p)
    u = smallest_eigenpair(G).vector
    assert abs(u @ res.f_star) > 1 - 1e-8


def test_scale_equivariance():
    scene = generate_scene(SceneConfig(n_points=60, outlier_fraction=0.2, seed=5))
    A, _, _ = normalized_A(scene)
    c = 3.0
    base = IhlsConfig(params=RobustParams(0.5, 1e-4), max_iters=5000, tol=1e-13)
    scaled = IhlsConfig(params=RobustParams(0.5, c * c * 1e-4), max_iters=5000, tol=1e-13)
    r1 = ihls_solve(A, base)
    r2 = ihls_solve(c * A, scaled)
    assert abs(r1.f_star @ r2.f_star) > 1 - 1e-9
    np.testing.assert_allclose(r2.beta_star, c * r1.beta_star, rtol=1e-6)


def test_unconverged_is_flagged_not_raised():
    scene = generate_scene(SceneConfig(n_points=100, outlier_fraction=0.4, seed=0))
    A, _, _ = normalized_A(scene)
    res = ihls_solve(A, IhlsConfig(max_iters=1))
    assert not res.converged
    assert res.iterations == 1


def test_rank_deficient_warns():
    A = np.zeros((10, 9))
    A[:, :7] = np.random.default_rng(0).normal(size=(10, 7))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = ihls_solve(A, IhlsConfig(max_iters=5))
    assert res.rank_deficient
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_solve_fundamental_examples():
    scene = generate_scene(SceneConfig(noise_px=0.0, seed=8))
    F, _ = solve_fundamental(scene.correspondences)
    assert f_distance(F, scene.f_gt) < 1e-7

    dirty = generate_scene(SceneConfig(noise_px=0.0, outlier_fraction=0.4, seed=8))
    F, _ = solve_fundamental(dirty.correspondences, weights=oracle_weights(dirty))
    assert f_distance(F, dirty.f_gt) < 1e-6

    minimal = generate_scene(SceneConfig(n_points=8, noise_px=0.0, seed=9))
    c = minimal.correspondences
    F, _ = solve_fundamental(c)
    assert np.abs(epipolar_residual(F, c.x, c.xp)).max() < 1e-9


def test_errors():
    with pytest.raises(UnderdeterminedError):
        ihls_solve(np.ones((7, 9)))
    with pytest.raises(InvalidInputError):
        ihls_solve(np.ones((8, 8)))
    with pytest.raises(ConfigError):
        IhlsConfig(max_iters=0)
    with pytest.raises(ConfigError):
        ihls_solve(np.random.default_rng(0).normal(size=(9, 9)), IhlsConfig(init="provided"))
