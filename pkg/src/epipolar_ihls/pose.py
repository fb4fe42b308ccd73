"""Relative pose from a fundamental matrix and known intrinsics."""

from dataclasses import dataclass

import numpy as np

from .exceptions import AmbiguousPoseError, DegenerateConfigurationError, InvalidInputError
from .geometry import _as_points, apply_transform, skew, unit_frobenius

_W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class RelativePose:
    """``X_target = R X_source + t`` with ``t`` a unit direction."""

    R: np.ndarray
    t: np.ndarray


def check_intrinsics(K):
    K = np.asarray(K, dtype=float)
    if K.shape != (3, 3) or np.any(np.tril(K, -1) != 0):
        raise InvalidInputError("intrinsics must be an upper-triangular 3x3 matrix")
    if not (K[0, 0] > 0 and K[1, 1] > 0) or K[2, 2] != 1.0:
        raise InvalidInputError("intrinsics need positive focal lengths and K[2, 2] == 1")
    return K


def project_essential(E):
    """Nearest matrix with singular values ``(s, s, 0)``."""
    U, S, Vt = np.linalg.svd(np.asarray(E, dtype=float))
    s = 0.5 * (S[0] + S[1])
    return U @ np.diag([s, s, 0.0]) @ Vt


def essential_from_fundamental(F, K_source, K_target):
    E = check_intrinsics(K_target).T @ np.asarray(F, dtype=float) @ check_intrinsics(K_source)
    return unit_frobenius(project_essential(E))


def decompose_essential(E):
    """The four ``(R, t)`` candidates consistent with ``E``."""
    U, S, Vt = np.linalg.svd(np.asarray(E, dtype=float))
    if not S[1] > 1e-12 * S[0]:
        raise DegenerateConfigurationError("essential matrix has rank < 2")
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    t = U[:, 2] / np.linalg.norm(U[:, 2])
    candidates = []
    for R in (U @ _W @ Vt, U @ _W.T @ Vt):
        for sign in (1.0, -1.0):
            candidates.append(RelativePose(R=R, t=sign * t))
    return candidates


def triangulate(R, t, xn, xpn):
    """Linear triangulation in normalized camera coordinates.

    Returns points in the source camera frame, shape ``(N, 3)``.
    """
    P1 = np.hstack([np.eye(3), np.zeros((3, 1))])
    P2 = np.hstack([R, np.reshape(t, (3, 1))])
    M = np.stack([
        xn[:, :1] * P1[2] - P1[0],
        xn[:, 1:] * P1[2] - P1[1],
        xpn[:, :1] * P2[2] - P2[0],
        xpn[:, 1:] * P2[2] - P2[1],
    ], axis=1)
    X = np.linalg.svd(M)[2][:, -1, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        return X[:, :3] / X[:, 3:]


def cheirality_count(pose, xn, xpn):
    X = triangulate(pose.R, pose.t, xn, xpn)
    z2 = X @ pose.R[2] + pose.t[2]
    with np.errstate(invalid="ignore"):
        return int(np.count_nonzero((X[:, 2] > 0) & (z2 > 0)))


def select_by_cheirality(candidates, x, xp, K_source, K_target):
    """Candidate with the most points in front of both cameras."""
    x = _as_points(x, "x")
    xp = _as_points(xp, "xp")
    if len(x) < 1:
        raise InvalidInputError("need at least one pair")
    xn = apply_transform(np.linalg.inv(check_intrinsics(K_source)), x)
    xpn = apply_transform(np.linalg.inv(check_intrinsics(K_target)), xp)
    counts = [cheirality_count(c, xn, xpn) for c in candidates]
    best = max(counts)
    tied = [i for i, c in enumerate(counts) if c == best]
    if len(tied) > 1:
        raise AmbiguousPoseError(f"candidates {tied} tie with {best} positive depths", tied)
    return candidates[tied[0]]


def recover_pose(F, x, xp, K_source, K_target):
    E = essential_from_fundamental(F, K_source, K_target)
    return select_by_cheirality(decompose_essential(E), x, xp, K_source, K_target)
