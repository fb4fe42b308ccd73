"""Backward pass through IHLS by implicit differentiation.

At a converged solution the projected stationarity map

    g(f, theta) = Gamma(beta(f)) f - (f^T Gamma(beta(f)) f) f

vanishes. Differentiating ``g(f*(theta), theta) = 0`` gives

    dL/dtheta = -(dg/dtheta)^T v,   with   (dg/df)^T v = dL/df*

so a backward pass costs one 9x9 solve plus one vector-Jacobian product,
independent of how many forward iterations were run. All Jacobians here
are analytic.

Notation used below, for ``A = diag(gamma) A_raw``::

    r = A f,  beta = sqrt(r^2 + eps),  w = beta^(p-2),  u = w * r
    h = A^T u = Gamma f,  m = w + (p-2) beta^(p-4) r^2,  H = A^T diag(m) A
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError, PreconditionError
from .geometry import check_weights
from .ihls import kkt_residual_matrix
from .numerics import solve_transposed
from .robust_loss import RobustParams, _pow


@dataclass(frozen=True, eq=False)
class Theta:
    A_raw: np.ndarray
    gamma: np.ndarray
    params: RobustParams

    def __post_init__(self):
        A = np.asarray(self.A_raw, dtype=float)
        if A.ndim != 2 or A.shape[1] != 9:
            raise InvalidInputError(f"A_raw must be (N, 9), got {A.shape}")
        object.__setattr__(self, "A_raw", A)
        object.__setattr__(self, "gamma", check_weights(self.gamma, A.shape[0]))

    @classmethod
    def unweighted(cls, A, params):
        A = np.asarray(A, dtype=float)
        return cls(A, np.ones(A.shape[0]), params)

    @property
    def A(self):
        return self.gamma[:, None] * self.A_raw


@dataclass
class ThetaGrads:
    d_A: np.ndarray
    d_gamma: np.ndarray
    d_p: float
    d_eps: float
    condition: float = np.nan

    def as_dict(self):
        return {
            "d_A": self.d_A.tolist(),
            "d_gamma": self.d_gamma.tolist(),
            "d_p": self.d_p,
            "d_eps": self.d_eps,
        }


def _unit(f):
    f = np.asarray(f, dtype=float).reshape(9)
    return f / np.linalg.norm(f)


def _terms(f, theta):
    A = theta.A
    p, eps = theta.params.p, theta.params.eps
    r = A @ f
    beta2 = r * r + eps
    beta = np.sqrt(beta2)
    w = _pow(beta, p - 2.0)
    u = w * r
    h = A.T @ u
    m = w + (p - 2.0) * _pow(beta, p - 4.0) * r * r
    return A, r, beta, w, u, h, m


def kkt_residual(f, theta):
    return kkt_residual_matrix(theta.A, _unit(f), theta.params)


def lagrange_multiplier(f, gamma_mat, p):
    """Multiplier of the unit-norm constraint: ``-(p/2) f^T Gamma f``."""
    f = np.asarray(f, dtype=float)
    return -0.5 * p * float(f @ gamma_mat @ f)


def jacobian_g_f(f, theta):
    """``dg/df`` as a 9x9 matrix, ``J = H - (f^T h) I - f (h + H f)^T``."""
    f = _unit(f)
    A, _, _, _, _, h, m = _terms(f, theta)
    H = A.T @ (m[:, None] * A)
    return H - np.dot(f, h) * np.eye(9) - np.outer(f, h + H @ f)


def solve_adjoint(J, incoming):
    """Solve ``J^T v = incoming``; returns ``(v, condition)``."""
    incoming = np.asarray(incoming, dtype=float).reshape(9)
    return solve_transposed(J, incoming)


def vjp_theta(f, theta, v):
    """``-v^T dg/dtheta`` for every parameter block."""
    f = _unit(f)
    v = np.asarray(v, dtype=float).reshape(9)
    A, r, beta, w, u, h, m = _terms(f, theta)
    p = theta.params.p
    vf = float(v @ f)

    def _project(dq):
        # v^T (dq - (f^T dq) f) for a perturbation dq of h
        return float(v @ dq) - vf * float(f @ dq)

    # dw/deps = ((p-2)/2) beta^(p-4);  dw/dp = w log(beta)
    d_eps = -_project(A.T @ (0.5 * (p - 2.0) * _pow(beta, p - 4.0) * r))
    d_p = -_project(A.T @ (w * np.log(beta) * r))

    Av = A @ v
    grad_A = np.outer(u, v) + np.outer(m * Av, f) - vf * (np.outer(u, f) + np.outer(m * r, f))
    d_A_eff = -grad_A
    d_gamma = np.sum(d_A_eff * theta.A_raw, axis=1)
    d_A_raw = theta.gamma[:, None] * d_A_eff
    return ThetaGrads(d_A=d_A_raw, d_gamma=d_gamma, d_p=d_p, d_eps=d_eps)


def implicit_backward(result, theta, incoming, kkt_tol=None):
    """Gradients of a loss w.r.t. ``theta`` given ``dL/df*``.

    ``result`` must come from a converged forward solve whose stationarity
    residual is below ``kkt_tol`` (defaults to 1e-9).
    """
    kkt_tol = 1e-9 if kkt_tol is None else kkt_tol
    f = _unit(result.f_star)
    if not result.converged:
        raise PreconditionError("forward solve did not converge; implicit gradient undefined")
    g_inf = float(np.abs(kkt_residual(f, theta)).max())
    if not g_inf < kkt_tol:
        raise PreconditionError(
            f"stationarity residual {g_inf:.3e} exceeds {kkt_tol:.1e}; not a stationary point"
        )
    J = jacobian_g_f(f, theta)
    v, condition = solve_adjoint(J, incoming)
    grads = vjp_theta(f, theta, v)
    grads.condition = condition
    return grads
