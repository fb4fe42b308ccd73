"""Iterative homogeneous least squares (IHLS).

Minimizes ``rho(A f; eps, p)`` over unit vectors ``f`` by block coordinate
descent on the joint objective

    phi(f, beta) = (p/2) f^T Gamma(beta) f + sum_n (p eps/2 beta_n^(p-2) + (2-p)/2 beta_n^p)

with ``Gamma(beta) = A^T diag(beta)^(p-2) A``. The beta-step is closed form,
the f-step is the smallest eigenvector of ``Gamma``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, InvalidInputError, UnderdeterminedError
from .geometry import (
    MIN_POINTS,
    build_observation_matrix,
    check_weights,
    denormalize_f,
    normalize,
    project_rank2,
)
from .numerics import canonical_sign, jacobi_eigh, smallest_eigenpair
from .robust_loss import RobustParams, _check_beta, _pow, optimal_beta, rho

INIT_LEAST_SQUARES = "least-squares"
INIT_PROVIDED = "provided"
STOP_STEP = "step"
STOP_STAGNATION = "stagnation"
RANK_TOL = 1e-12
STALL_WINDOW = 10


@dataclass(frozen=True)
class IhlsConfig:
    params: RobustParams = field(default_factory=RobustParams)
    max_iters: int = 100
    tol: float = 1e-10
    kkt_tol: float = 1e-9
    init: str = INIT_LEAST_SQUARES
    min_iters: int = 0
    stop_rule: str = STOP_STEP

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not (self.tol > 0 and self.kkt_tol > 0):
            raise ConfigError("tol and kkt_tol must be positive")
        if self.min_iters < 0:
            raise ConfigError("min_iters must be nonnegative")
        if self.stop_rule not in (STOP_STEP, STOP_STAGNATION):
            raise ConfigError(f"unknown stop_rule {self.stop_rule!r}")
        if self.init not in (INIT_LEAST_SQUARES, INIT_PROVIDED):
            raise ConfigError(f"unknown init {self.init!r}")

    @classmethod
    def make(cls, p=None, eps=None, **kwargs):
        params = RobustParams(
            p=RobustParams.p if p is None else p, eps=RobustParams.eps if eps is None else eps
        )
        return cls(params=params, **kwargs)


@dataclass
class IhlsResult:
    f_star: np.ndarray
    beta_star: np.ndarray
    iterations: int
    converged: bool
    kkt_residual_inf: float
    objective_trace: list
    lambda_min: float = np.nan
    eigengap: float = np.nan
    rank_deficient: bool = False


def _check_A(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] != 9:
        raise InvalidInputError(f"observation matrix must be (N, 9), got {A.shape}")
    if A.shape[0] < MIN_POINTS:
        raise UnderdeterminedError(f"need at least {MIN_POINTS} rows, got {A.shape[0]}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("observation matrix has non-finite entries")
    return A


def gamma_matrix(A, beta, p):
    """``A^T diag(beta)^(p-2) A``, symmetrized."""
    beta = _check_beta(beta)
    G = A.T @ (_pow(beta, p - 2.0)[:, None] * A)
    return 0.5 * (G + G.T)


def beta_step(A, f, eps):
    return optimal_beta(A @ f, eps)


def f_step(gamma, previous_f):
    """Smallest eigenvector of ``gamma``, sign-aligned with ``previous_f``."""
    return smallest_eigenpair(gamma, reference=previous_f).vector


def kkt_residual_matrix(A, f, params):
    """Projected stationarity residual ``(I - f f^T) Gamma(beta(f)) f``."""
    beta = optimal_beta(A @ f, params.eps)
    h = gamma_matrix(A, beta, params.p) @ f
    return h - np.dot(f, h) * f


def least_squares_vector(A):
    """Unit ``f`` minimizing ``||A f||`` (smallest eigenvector of ``A^T A``)."""
    return smallest_eigenpair(A.T @ A).vector


def ihls_solve(A, config=None, f0=None):
    """Run IHLS on the observation matrix ``A``.

    Starts from ``f0`` when given, else from the plain least-squares
    solution. Stops when the iterate moves less than ``tol`` (modulo sign),
    the stationarity residual drops below ``kkt_tol``, or ``max_iters`` is
    hit; the last case returns ``converged=False`` rather than raising.
    No stopping test is applied before ``min_iters`` iterations.

    With ``stop_rule="stagnation"`` a step below ``tol`` is not enough:
    iteration continues until the step size has not reached a new minimum
    for ``STALL_WINDOW`` iterations, i.e. until rounding noise dominates.
    Finite-difference checks need this working-precision solution.
    """
    config = config or IhlsConfig()
    A = _check_A(A)
    params = config.params

    values, _, _ = jacobi_eigh(A.T @ A)
    rank_deficient = bool(values[1] <= RANK_TOL * max(values[-1], np.finfo(float).tiny))
    if rank_deficient:
        warnings.warn("observation matrix has rank < 8; solution is not unique", RuntimeWarning)

    if f0 is None:
        if config.init == INIT_PROVIDED:
            raise ConfigError("init='provided' requires an initial vector")
        f = least_squares_vector(A)
    else:
        f = np.asarray(f0, dtype=float).reshape(9)
        norm = np.linalg.norm(f)
        if not norm > 0:
            raise InvalidInputError("initial vector must be nonzero")
        f = f / norm

    beta = beta_step(A, f, params.eps)
    G = gamma_matrix(A, beta, params.p)
    trace = [float(np.sum(_pow(beta, params.p)))]
    converged = False
    g_inf = np.inf
    iterations = 0
    pair = None
    steps = []
    for iterations in range(1, config.max_iters + 1):
        pair = smallest_eigenpair(G, reference=f)
        f_new = pair.vector
        steps.append(min(np.linalg.norm(f_new - f), np.linalg.norm(f_new + f)))
        f = f_new
        # beta and Gamma at the new iterate serve the objective, the
        # stationarity residual and the next f-step
        beta = beta_step(A, f, params.eps)
        G = gamma_matrix(A, beta, params.p)
        trace.append(float(np.sum(_pow(beta, params.p))))
        h = G @ f
        g_inf = float(np.abs(h - np.dot(f, h) * f).max())
        if iterations >= config.min_iters and (_small_step(steps, config) or g_inf < config.kkt_tol):
            converged = True
            break

    f = canonical_sign(f)
    return IhlsResult(
        f_star=f,
        beta_star=optimal_beta(A @ f, params.eps),
        iterations=iterations,
        converged=converged,
        kkt_residual_inf=g_inf,
        objective_trace=trace,
        lambda_min=pair.value,
        eigengap=pair.gap,
        rank_deficient=rank_deficient,
    )


def _small_step(steps, config):
    step = steps[-1]
    if config.stop_rule == STOP_STEP:
        return step < config.tol
    if step >= config.tol or len(steps) <= STALL_WINDOW:
        return False
    return min(steps[-STALL_WINDOW:]) >= min(steps[:-STALL_WINDOW])


def _prepare(corr, weights):
    if weights is None:
        weights = corr.weights
    if weights is not None:
        weights = check_weights(weights, len(corr), min_positive=MIN_POINTS)
    normed, T, Tp = normalize(corr)
    return build_observation_matrix(normed, weights), T, Tp


def to_normalized_vector(F, T_source, T_target):
    """Express a pixel-space ``F`` in normalized coordinates as a unit vector."""
    F_hat = np.linalg.inv(T_target).T @ np.asarray(F, dtype=float) @ np.linalg.inv(T_source)
    f = F_hat.ravel()
    return f / np.linalg.norm(f)


def solve_fundamental(corr, config=None, weights=None, F_init=None):
    """Robust fundamental matrix from correspondences.

    Normalizes coordinates, runs IHLS on the (weighted) observation matrix,
    maps back to pixels and projects to rank 2. ``weights`` defaults to
    ``corr.weights``; ``F_init`` is an optional pixel-space warm start.
    Returns ``(F, IhlsResult)``.
    """
    A, T, Tp = _prepare(corr, weights)
    f0 = None if F_init is None else to_normalized_vector(F_init, T, Tp)
    result = ihls_solve(A, config, f0=f0)
    F = project_rank2(denormalize_f(result.f_star.reshape(3, 3), T, Tp))
    return F, result


def eight_point(corr, weights=None):
    """Normalized (weighted) 8-point estimate, projected to rank 2."""
    A, T, Tp = _prepare(corr, weights)
    f = least_squares_vector(A)
    return project_rank2(denormalize_f(f.reshape(3, 3), T, Tp))
