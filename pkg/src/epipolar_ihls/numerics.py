"""Small dense linear algebra: 9x9 symmetric eigenproblems and transposed solves.

The eigen-solver is a cyclic Jacobi iteration compiled with numba. It is
deterministic and accurate to a few ulps of ``||M||`` on the tiny matrices
used by the solver, without touching LAPACK.
"""

import warnings
from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

from .exceptions import ContractViolation, NumericError, SingularSystemError

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
MAX_CONDITION = 1e12
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    gap: float
    sweeps: int


@numba.njit(cache=True)
def _jacobi_sweeps(a, tol, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    fro = np.sqrt(np.sum(a * a))
    sweeps = 0
    while True:
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if np.sqrt(off) <= tol * fro:
            return a, v, sweeps, True
        if sweeps >= max_sweeps:
            return a, v, sweeps, False
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                # smaller root of t^2 + 2 tau t - 1 = 0 keeps |angle| <= pi/4
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq


def check_symmetric(M, tol=SYMMETRY_TOL):
    """Return ``M`` as a float array, symmetrized, or raise if it is not symmetric."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractViolation("matrix has non-finite entries")
    scale = max(np.abs(M).max(), np.finfo(float).tiny)
    if np.abs(M - M.T).max() > tol * scale:
        raise ContractViolation("matrix is not symmetric")
    return 0.5 * (M + M.T)


def jacobi_eigh(M):
    """Full eigendecomposition of a symmetric matrix, ascending eigenvalues.

    Returns ``(values, vectors, sweeps)``; columns of ``vectors`` are unit
    eigenvectors. Raises NumericError when the sweep budget is exhausted.
    """
    M = check_symmetric(M)
    a, v, sweeps, ok = _jacobi_sweeps(M, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if not ok:
        raise NumericError(f"Jacobi iteration did not converge in {sweeps} sweeps")
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order], sweeps


def sign_align(u, reference):
    """Flip ``u`` so that it has a nonnegative dot product with ``reference``."""
    u = np.asarray(u, dtype=float)
    if np.dot(u, reference) < 0:
        return -u
    return u


def canonical_sign(u):
    """Flip ``u`` so that its largest-magnitude entry is positive."""
    u = np.asarray(u, dtype=float)
    # ties resolve to the first index; stable across platforms
    i = int(np.argmax(np.abs(u)))
    if u[i] < 0:
        return -u
    return u


def smallest_eigenpair(M, reference=None):
    """Eigenpair of the smallest eigenvalue of a symmetric matrix.

    The eigenvector sign is aligned with ``reference`` when given, otherwise
    the largest-magnitude entry is made positive.
    """
    values, vectors, sweeps = jacobi_eigh(M)
    u = vectors[:, 0]
    u = u / np.linalg.norm(u)
    u = canonical_sign(u) if reference is None else sign_align(u, reference)
    gap = float(values[1] - values[0]) if len(values) > 1 else np.inf
    return EigenPair(value=float(values[0]), vector=u, gap=gap, sweeps=sweeps)


def solve_transposed(M, b, max_condition=MAX_CONDITION):
    """Solve ``M.T @ v = b`` by LU with partial pivoting.

    Returns ``(v, condition)`` where ``condition`` is the 1-norm condition
    number of ``M``. Raises SingularSystemError above ``max_condition``.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(M)):
        raise SingularSystemError("matrix has non-finite entries", np.inf)
    with warnings.catch_warnings():
        # exact singularity is reported below as SingularSystemError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M.T, check_finite=False)
    if np.any(np.diag(lu) == 0.0):
        raise SingularSystemError("matrix is exactly singular", np.inf)
    # exact 1-norm condition is cheap at this size
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(M.shape[0]), check_finite=False)
    condition = float(np.linalg.norm(M, 1) * np.linalg.norm(inv.T, 1))
    if not np.isfinite(condition) or condition > max_condition:
        raise SingularSystemError("adjoint system is numerically singular", condition)
    v = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    return v, condition
