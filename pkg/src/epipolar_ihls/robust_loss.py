"""Smoothed l_p^p robust objective and its quadratic majorizer.

For ``0 < p <= 2``, ``beta > 0`` and every real ``x``::

    |x|^p <= (p/2) x^2 beta^(p-2) + ((2-p)/2) beta^p

Substituting ``x^2 -> f^2 + eps`` gives a quadratic upper bound ``psi`` on
``rho(f) = sum (f_n^2 + eps)^(p/2)`` which is tight at
``beta_n = sqrt(f_n^2 + eps)``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError

DEFAULT_P = 0.5
DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class RobustParams:
    p: float = DEFAULT_P
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        # p = 2 is admitted so the plain least-squares case shares one code path
        if not (0.0 < self.p <= 2.0) or not np.isfinite(self.p):
            raise InvalidInputError(f"p must lie in (0, 2], got {self.p}")
        if not (self.eps > 0.0) or not np.isfinite(self.eps):
            raise InvalidInputError(f"eps must be positive and finite, got {self.eps}")


def _pow(base, exponent):
    # base > 0 is guaranteed by eps > 0 / beta > 0; log keeps tiny bases accurate
    return np.exp(exponent * np.log(base))


def _check_beta(beta):
    beta = np.asarray(beta, dtype=float)
    if np.any(~(beta > 0)):
        raise InvalidInputError("beta must be strictly positive")
    return beta


def rho(values, params):
    """``sum_n (values_n^2 + eps)^(p/2)``."""
    v = np.asarray(values, dtype=float)
    return float(np.sum(_pow(v * v + params.eps, 0.5 * params.p)))


def weighted_rho(residuals, gamma, params):
    """Robust loss of the weighted residuals ``gamma * residuals``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise InvalidInputError("weights must be nonnegative")
    return rho(gamma * np.asarray(residuals, dtype=float), params)


def psi_majorizer(f, beta, params):
    """Quadratic-in-``f`` upper bound on ``rho(f)`` parameterized by ``beta``."""
    f = np.asarray(f, dtype=float)
    beta = _check_beta(beta)
    p, eps = params.p, params.eps
    b_pm2 = _pow(beta, p - 2.0)
    quad = 0.5 * p * np.sum(f * f * b_pm2)
    rest = np.sum(0.5 * p * eps * b_pm2 + 0.5 * (2.0 - p) * _pow(beta, p))
    return float(quad + rest)


def optimal_beta(f, eps):
    """Minimizer of ``psi`` over ``beta``: ``sqrt(f^2 + eps)``.

    Setting the beta-gradient of ``psi`` to zero gives
    ``kappa (f_n^2 + eps - beta_n^2) beta_n^(p-3) = 0`` with
    ``kappa = p (p - 2) / 2``, whose only positive root is returned here.
    """
    if not eps > 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    f = np.asarray(f, dtype=float)
    return np.sqrt(f * f + eps)
