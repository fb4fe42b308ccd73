"""Epipolar geometry primitives.

Conventions: ``vec(F)`` is row-major, so ``F.ravel()`` pairs with the
observation row ``[x'x, x'y, x', y'x, y'y, y', x, y, 1]``. A fundamental
matrix in canonical form has unit Frobenius norm and a positive
largest-magnitude entry.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DegenerateConfigurationError,
    InvalidInputError,
    UnderdeterminedError,
)
from .numerics import canonical_sign, jacobi_eigh

MIN_POINTS = 8


def _as_points(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != 2:
        raise InvalidInputError(f"{name} must have shape (N, 2), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite coordinates")
    return a


@dataclass(frozen=True, eq=False)
class CorrespondenceSet:
    """N matched point pairs with optional weights and side information.

    ``x`` holds source-image points and ``xp`` the matching target-image
    points, both shaped ``(N, 2)`` in pixels.
    """

    x: np.ndarray
    xp: np.ndarray
    weights: np.ndarray | None = None
    side_info: np.ndarray | None = field(default=None)

    def __post_init__(self):
        x = _as_points(self.x, "x")
        xp = _as_points(self.xp, "xp")
        if x.shape != xp.shape:
            raise InvalidInputError("x and xp must have the same number of points")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xp", xp)
        if self.weights is not None:
            object.__setattr__(self, "weights", check_weights(self.weights, len(x)))
        if self.side_info is not None:
            s = np.asarray(self.side_info, dtype=float)
            if s.ndim != 2 or s.shape[0] != len(x):
                raise InvalidInputError("side_info must have shape (N, k)")
            object.__setattr__(self, "side_info", s)
        for arr in (self.x, self.xp, self.weights, self.side_info):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self):
        return len(self.x)

    @classmethod
    def from_array(cls, X, weights=None, side_info=None):
        """Build from an ``(N, 4)`` array of ``x, y, x', y'`` columns."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 4:
            raise InvalidInputError(f"expected an (N, 4) array, got {X.shape}")
        return cls(X[:, :2], X[:, 2:], weights, side_info)

    def to_array(self):
        return np.hstack([self.x, self.xp])

    def with_weights(self, weights):
        return CorrespondenceSet(self.x, self.xp, weights, self.side_info)

    def subset(self, index):
        index = np.asarray(index)
        w = None if self.weights is None else self.weights[index]
        s = None if self.side_info is None else self.side_info[index]
        return CorrespondenceSet(self.x[index], self.xp[index], w, s)


def check_weights(weights, n, min_positive=0):
    w = np.asarray(weights, dtype=float).reshape(-1)
    if len(w) != n:
        raise InvalidInputError(f"expected {n} weights, got {len(w)}")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be finite")
    if np.any(w < 0):
        raise InvalidInputError("weights must be nonnegative")
    if np.count_nonzero(w) < min_positive:
        raise UnderdeterminedError(
            f"need at least {min_positive} positive weights, got {np.count_nonzero(w)}"
        )
    return w


def homogenize(points):
    points = np.asarray(points, dtype=float)
    return np.concatenate([points, np.ones(points.shape[:-1] + (1,))], axis=-1)


def skew(t):
    tx, ty, tz = np.asarray(t, dtype=float)
    return np.array([[0.0, -tz, ty], [tz, 0.0, -tx], [-ty, tx, 0.0]])


def build_observation_row(x, xp):
    """Kronecker epipolar row ``[x'x, x'y, x', y'x, y'y, y', x, y, 1]``."""
    x = _as_points(x, "x")[0]
    xp = _as_points(xp, "xp")[0]
    return np.kron(homogenize(xp), homogenize(x))


def observation_rows(x, xp):
    x = homogenize(_as_points(x, "x"))
    xp = homogenize(_as_points(xp, "xp"))
    return (xp[:, :, None] * x[:, None, :]).reshape(len(x), 9)


def build_observation_matrix(corr, weights=None):
    """Stack the epipolar rows of ``corr``; row ``n`` is scaled by ``weights[n]``."""
    if len(corr) < MIN_POINTS:
        raise UnderdeterminedError(f"need at least {MIN_POINTS} pairs, got {len(corr)}")
    A = observation_rows(corr.x, corr.xp)
    if weights is not None:
        A = A * check_weights(weights, len(corr))[:, None]
    return A


def normalization_transform(points):
    """Similarity taking ``points`` to zero centroid and mean norm sqrt(2)."""
    points = _as_points(points, "points")
    centroid = points.mean(axis=0)
    mean_dist = np.linalg.norm(points - centroid, axis=1).mean()
    if not mean_dist > 0:
        raise DegenerateConfigurationError("all points coincide; cannot normalize")
    s = np.sqrt(2.0) / mean_dist
    return np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])


def apply_transform(T, points):
    h = homogenize(points) @ T.T
    return h[:, :2] / h[:, 2:]


def normalize(corr):
    """Condition both images independently.

    Returns ``(normalized_set, T_source, T_target)``.
    """
    T = normalization_transform(corr.x)
    Tp = normalization_transform(corr.xp)
    normed = CorrespondenceSet(
        apply_transform(T, corr.x), apply_transform(Tp, corr.xp), corr.weights, corr.side_info
    )
    return normed, T, Tp


def unit_frobenius(F):
    F = np.asarray(F, dtype=float)
    norm = np.linalg.norm(F)
    if norm == 0:
        raise DegenerateConfigurationError("zero matrix has no direction")
    return F / norm


def canonicalize_f(F):
    """Unit Frobenius norm with the largest-magnitude entry positive."""
    return canonical_sign(unit_frobenius(F).ravel()).reshape(3, 3)


def f_distance(F1, F2):
    """Frobenius distance between two matrices modulo scale and sign."""
    a = unit_frobenius(F1)
    b = unit_frobenius(F2)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def denormalize_f(F_hat, T_source, T_target):
    """Map a fundamental matrix from normalized to pixel coordinates."""
    return unit_frobenius(T_target.T @ F_hat @ T_source)


def epipolar_residual(F, x, xp):
    """Algebraic residual ``x'^T F x``; scalar for a single pair, else an array."""
    F = np.asarray(F, dtype=float)
    single = np.ndim(x) == 1
    xh = homogenize(_as_points(x, "x"))
    xph = homogenize(_as_points(xp, "xp"))
    r = np.einsum("ni,ij,nj->n", xph, F, xh)
    return float(r[0]) if single else r


def project_rank2(F):
    """Frobenius-nearest rank-2 matrix, returned in canonical form.

    With ``v`` the right singular vector of the smallest singular value,
    ``F (I - v v^T)`` drops exactly that singular triplet. ``v`` is read off
    the eigendecomposition of ``F^T F``; if the smallest singular value is
    repeated any vector of that eigenspace yields a nearest rank-2 matrix.
    """
    F = np.asarray(F, dtype=float)
    if not np.all(np.isfinite(F)):
        raise InvalidInputError("F has non-finite entries")
    _, vectors, _ = jacobi_eigh(F.T @ F)
    v = vectors[:, 0]
    return canonicalize_f(F - np.outer(F @ v, v))


def fundamental_from_poses(K_source, K_target, R, t):
    """Ground-truth ``F = K'^-T [t]_x R K^-1`` for ``X_target = R X_source + t``."""
    t = np.asarray(t, dtype=float)
    if not np.linalg.norm(t) > 0:
        raise DegenerateConfigurationError("zero baseline has no fundamental matrix")
    E = skew(t) @ np.asarray(R, dtype=float)
    F = np.linalg.inv(np.asarray(K_target, dtype=float)).T @ E @ np.linalg.inv(K_source)
    return canonicalize_f(F)
