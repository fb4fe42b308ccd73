"""Finite-difference validation of the implicit IHLS gradients.

Each instance draws a small synthetic scene, solves it tightly, and
compares ``implicit_backward`` against central differences of the whole
forward solve for the sign-invariant loss ``L(f) = f^T C f``.
"""

from dataclasses import replace

import numpy as np

from .exceptions import PreconditionError, SingularSystemError
from .geometry import build_observation_matrix, normalize
from .ihls import STOP_STAGNATION, STOP_STEP, IhlsConfig, ihls_solve
from .implicit_grad import Theta, implicit_backward
from .numerics import jacobi_eigh
from .rng import PCG32
from .robust_loss import RobustParams
from .synth import SceneConfig, generate_scene

REL_TOL = 1e-4
ITERATION_TOL = 1e-10
ABS_FLOOR = 1e-9


def rel_error(a, b, floor=ABS_FLOOR):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def make_instance(seed, n, p, eps, outlier_fraction=0.2):
    """Observation matrix, weights and loss matrix for one check."""
    scene = generate_scene(
        SceneConfig(n_points=n, noise_px=1.0, outlier_fraction=outlier_fraction, seed=seed)
    )
    normed, _, _ = normalize(scene.correspondences)
    A_raw = build_observation_matrix(normed)
    rng = PCG32(seed, stream=1)
    gamma = np.array([rng.uniform(0.5, 1.5) for _ in range(n)])
    C = np.array([[rng.normal() for _ in range(9)] for _ in range(9)])
    return Theta(A_raw, gamma, RobustParams(p, eps)), 0.5 * (C + C.T)


def eigen_perturbation_grad(theta, C):
    """``dL/dA_raw`` for ``p = 2`` from first-order eigenvector perturbation."""
    A = theta.A
    values, vectors, _ = jacobi_eigh(A.T @ A)
    f = vectors[:, 0]
    pinv = sum(np.outer(vectors[:, j], vectors[:, j]) / (values[j] - values[0]) for j in range(1, 9))
    z = pinv @ (C @ f)
    grad_A = -2.0 * (np.outer(A @ f, z) + np.outer(A @ z, f))
    return theta.gamma[:, None] * grad_A


def _forward(theta, config, f0):
    return ihls_solve(theta.A, replace(config, params=theta.params), f0=f0)


def check_instance(seed, n=20, p=0.5, eps=1e-3, fd_step=1e-6, max_iters=20000, tol=1e-12,
                   n_sampled_A=30):
    theta, C = make_instance(seed, n, p, eps)
    # a 1e-6 perturbation moves f* by ~1e-9, so a solve stopped at a 1e-12
    # step would limit the difference quotient to ~1e-3 relative accuracy
    config = IhlsConfig(params=theta.params, max_iters=max_iters, tol=tol, kkt_tol=1e-14,
                        stop_rule=STOP_STAGNATION)
    record = {"seed": seed}
    result = _forward(theta, config, None)
    record.update(iterations=result.iterations, converged=result.converged,
                  kkt_residual_inf=result.kkt_residual_inf)
    f = result.f_star
    incoming = 2.0 * C @ f
    try:
        grads = implicit_backward(result, theta, incoming)
    except (PreconditionError, SingularSystemError) as exc:
        record.update(status="error", error=f"{type(exc).__name__}: {exc}")
        return record
    record["condition"] = grads.condition

    def loss(th):
        r = _forward(th, config, f)
        return float(r.f_star @ C @ r.f_star)

    def central(make):
        return (loss(make(fd_step)) - loss(make(-fd_step))) / (2.0 * fd_step)

    def backward(make):
        # second-order one-sided difference, for p at its upper bound 2
        return (3.0 * loss(make(0.0)) - 4.0 * loss(make(-fd_step)) + loss(make(-2.0 * fd_step))) / (
            2.0 * fd_step
        )

    vary_p = lambda h: Theta(theta.A_raw, theta.gamma, RobustParams(p + h, eps))  # noqa: E731
    fd_p = central(vary_p) if p + fd_step <= 2.0 else backward(vary_p)
    fd_eps = central(lambda h: Theta(theta.A_raw, theta.gamma, RobustParams(p, eps + h)))
    fd_gamma = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        fd_gamma.append(central(lambda h: Theta(theta.A_raw, theta.gamma + h * e, theta.params)))
    rng = PCG32(seed, stream=2)
    entries = [(rng.bounded(n), rng.bounded(9)) for _ in range(n_sampled_A)]
    fd_A, an_A = [], []
    for i, j in entries:
        E = np.zeros_like(theta.A_raw)
        E[i, j] = 1.0
        fd_A.append(central(lambda h: Theta(theta.A_raw + h * E, theta.gamma, theta.params)))
        an_A.append(grads.d_A[i, j])

    errors = {
        "d_p": rel_error(grads.d_p, fd_p),
        "d_eps": rel_error(grads.d_eps, fd_eps),
        "d_gamma": rel_error(grads.d_gamma, fd_gamma),
        "d_A": rel_error(an_A, fd_A),
    }
    record["max_rel_error"] = errors

    # same start, exactly 20 iterations past the point where the first run
    # stopped: any step passes the test once min_iters is reached
    extra = result.iterations + 20
    longer = replace(config, min_iters=extra, max_iters=extra, stop_rule=STOP_STEP, tol=np.inf)
    result2 = _forward(theta, longer, None)
    grads2 = implicit_backward(result2, theta, 2.0 * C @ result2.f_star)
    flat1 = np.concatenate([grads.d_A.ravel(), grads.d_gamma, [grads.d_p, grads.d_eps]])
    flat2 = np.concatenate([grads2.d_A.ravel(), grads2.d_gamma, [grads2.d_p, grads2.d_eps]])
    record["iteration_independence"] = float(np.abs(flat1 - flat2).max() / np.abs(flat1).max())

    if p == 2.0:
        record["eigen_perturbation_error"] = rel_error(
            grads.d_A, eigen_perturbation_grad(theta, C), floor=1e-6 * np.abs(grads.d_A).max()
        )

    ok = all(v < REL_TOL for v in errors.values())
    ok = ok and record["iteration_independence"] < ITERATION_TOL
    ok = ok and record.get("eigen_perturbation_error", 0.0) < REL_TOL
    record["status"] = "pass" if ok else "fail"
    return record


def run_gradcheck(seed=0, instances=20, n=20, p=0.5, eps=1e-3, fd_step=1e-6, max_iters=20000,
                  tol=1e-12):
    records = [
        check_instance(seed + k, n=n, p=p, eps=eps, fd_step=fd_step, max_iters=max_iters, tol=tol)
        for k in range(instances)
    ]
    worst = {}
    for rec in records:
        for key, val in rec.get("max_rel_error", {}).items():
            worst[key] = max(worst.get(key, 0.0), val)
    return {
        "settings": {"seed": seed, "instances": instances, "n": n, "p": p, "eps": eps,
                     "fd_step": fd_step, "max_iters": max_iters, "tol": tol},
        "max_rel_error": worst,
        "tolerance": REL_TOL,
        "passed": all(r["status"] == "pass" for r in records),
        "instances": records,
    }
