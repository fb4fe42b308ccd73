"""Epipolar distances, pose errors and the pose-AUC protocol."""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError
from .geometry import _as_points, homogenize

DEFAULT_THRESHOLDS = (5.0, 10.0, 20.0)
DENOMINATOR_FLOOR = 1e-30
STANDARD = "standard"
LITERAL = "literal"


@dataclass(frozen=True)
class PoseError:
    rot_deg: float
    trans_deg: float

    @property
    def max_deg(self):
        return max(self.rot_deg, self.trans_deg)


@dataclass(frozen=True)
class LossWeights:
    lambda_rot: float = 10.0
    lambda_epi: float = 1e-3

    def __post_init__(self):
        if self.lambda_rot < 0 or self.lambda_epi < 0:
            raise InvalidInputError("loss weights must be nonnegative")


def _epipolar_parts(F, x, xp):
    F = np.asarray(F, dtype=float)
    xh = homogenize(_as_points(x, "x"))
    xph = homogenize(_as_points(xp, "xp"))
    Fx = xh @ F.T
    Ftxp = xph @ F
    num = np.sum(xph * Fx, axis=1)
    return num, Fx, Ftxp


def _finish(values, single):
    return float(values[0]) if single else values


def sampson_distance(F, x, xp, mode=STANDARD):
    """Sampson distance of each pair under ``F``.

    ``mode="standard"``: ``(x'^T F x)^2 / ((Fx)_1^2 + (Fx)_2^2 + (F^T x')_1^2 + (F^T x')_2^2)``.
    ``mode="literal"``: unsquared numerator over full squared 3-norms, which
    is sign-sensitive. Pairs with a vanishing denominator map to ``inf``.
    """
    single = np.ndim(x) == 1
    num, Fx, Ftxp = _epipolar_parts(F, x, xp)
    if mode == STANDARD:
        num = num * num
        den = Fx[:, 0] ** 2 + Fx[:, 1] ** 2 + Ftxp[:, 0] ** 2 + Ftxp[:, 1] ** 2
    elif mode == LITERAL:
        den = np.sum(Fx * Fx, axis=1) + np.sum(Ftxp * Ftxp, axis=1)
    else:
        raise InvalidInputError(f"unknown Sampson mode {mode!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den < DENOMINATOR_FLOOR, np.inf, num / np.maximum(den, DENOMINATOR_FLOOR))
    return _finish(out, single)


def symmetric_epipolar_distance(F, x, xp):
    """Sum of squared point-to-epipolar-line distances in both images."""
    single = np.ndim(x) == 1
    num, Fx, Ftxp = _epipolar_parts(F, x, xp)
    d1 = Fx[:, 0] ** 2 + Fx[:, 1] ** 2
    d2 = Ftxp[:, 0] ** 2 + Ftxp[:, 1] ** 2
    bad = (d1 < DENOMINATOR_FLOOR) | (d2 < DENOMINATOR_FLOOR)
    d1 = np.maximum(d1, DENOMINATOR_FLOOR)
    d2 = np.maximum(d2, DENOMINATOR_FLOOR)
    out = np.where(bad, np.inf, num * num * (1.0 / d1 + 1.0 / d2))
    return _finish(out, single)


def epipolar_loss(F, x, xp, mode=STANDARD):
    """Mean Sampson distance over a set of ground-truth pairs."""
    d = np.atleast_1d(sampson_distance(F, x, xp, mode=mode))
    if d.size == 0:
        raise InvalidInputError("epipolar_loss needs at least one pair")
    return float(np.mean(d))


def _check_rotation(R, name):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.allclose(R.T @ R, np.eye(3), atol=1e-9, rtol=0):
        raise InvalidInputError(f"{name} is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > 1e-9:
        raise InvalidInputError(f"{name} is not a proper rotation")
    return R


def _angle_deg(sin, cos):
    # atan2 keeps full precision near 0 and 180 degrees, unlike arccos
    return float(np.degrees(np.arctan2(sin, cos)))


def rotation_angle_error(R_hat, R):
    """Geodesic angle between two rotations, in degrees."""
    R_hat = _check_rotation(R_hat, "R_hat")
    R = _check_rotation(R, "R")
    D = R_hat.T @ R
    axis = np.array([D[2, 1] - D[1, 2], D[0, 2] - D[2, 0], D[1, 0] - D[0, 1]])
    return _angle_deg(0.5 * np.linalg.norm(axis), 0.5 * (np.trace(D) - 1.0))


def translation_angle_error(t_hat, t):
    """Angle between two translation directions, in degrees."""
    t_hat = np.asarray(t_hat, dtype=float)
    t = np.asarray(t, dtype=float)
    nh, nt = np.linalg.norm(t_hat), np.linalg.norm(t)
    if not (nh > 0 and nt > 0):
        raise InvalidInputError("translation vectors must be nonzero")
    return _angle_deg(np.linalg.norm(np.cross(t_hat, t)), np.dot(t_hat, t))


def pose_error(R_hat, t_hat, R, t):
    return PoseError(rotation_angle_error(R_hat, R), translation_angle_error(t_hat, t))


def pose_auc(errors, thresholds=DEFAULT_THRESHOLDS):
    """Normalized area under the recall curve up to each threshold.

    Recall is the step function ``t -> mean(errors <= t)``; its integral on
    ``[0, tau]`` is ``mean(max(tau - e, 0))`` so no binning is involved.
    ``inf`` counts as a failure.
    """
    errors = np.asarray(errors, dtype=float).reshape(-1)
    if errors.size == 0:
        raise InvalidInputError("pose_auc needs at least one error")
    if np.any(np.isnan(errors)) or np.any(errors < 0):
        raise InvalidInputError("errors must be nonnegative (inf allowed)")
    thresholds = [float(t) for t in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])) or thresholds[0] <= 0:
        raise InvalidInputError("thresholds must be positive and ascending")
    return [float(np.mean(np.clip(tau - errors, 0.0, None)) / tau) for tau in thresholds]


def twg_loss(F, R_pair, t_pair, gt_x, gt_xp, weights=None):
    """Composite pose + epipolar loss (radians for the angle terms).

    ``R_pair`` and ``t_pair`` are ``(estimate, ground_truth)`` tuples.
    """
    weights = weights or LossWeights()
    angle_t = np.radians(translation_angle_error(*t_pair))
    angle_r = np.radians(rotation_angle_error(*R_pair))
    return float(angle_t + weights.lambda_rot * angle_r + weights.lambda_epi * epipolar_loss(F, gt_x, gt_xp))
