"""Deterministic synthetic two-view scenes with noise and outliers."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigError
from .geometry import CorrespondenceSet, fundamental_from_poses
from .pose import RelativePose
from .rng import PCG32

MAX_ATTEMPTS_PER_POINT = 1000


@dataclass(frozen=True)
class SceneConfig:
    n_points: int = 100
    noise_px: float = 1.0
    outlier_fraction: float = 0.0
    depth_range: tuple = (4.0, 8.0)
    baseline: float = 1.8
    rotation_deg: float = 10.0
    focal_px: float = 500.0
    image_size: tuple = (640, 480)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "depth_range", tuple(float(d) for d in self.depth_range))
        object.__setattr__(self, "image_size", tuple(int(s) for s in self.image_size))
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise ConfigError(f"n_points must be an integer >= 8, got {self.n_points}")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise ConfigError(f"outlier_fraction must lie in [0, 1), got {self.outlier_fraction}")
        if self.n_points - self.n_outliers < 8:
            raise ConfigError(
                f"{self.n_points} points with outlier_fraction {self.outlier_fraction} "
                f"leave {self.n_points - self.n_outliers} inliers; need at least 8"
            )
        if self.noise_px < 0:
            raise ConfigError("noise_px must be nonnegative")
        near, far = self.depth_range
        if not 0 < near <= far:
            raise ConfigError(f"invalid depth_range {self.depth_range}")
        if not self.baseline > 0:
            raise ConfigError("baseline must be positive")
        if not self.focal_px > 0 or min(self.image_size) <= 0:
            raise ConfigError("focal_px and image_size must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def n_outliers(self):
        # floor convention: 0.4 * 200 -> 80, 0.35 * 21 -> 7
        return int(math.floor(self.outlier_fraction * self.n_points + 1e-9))

    def to_dict(self):
        d = asdict(self)
        d["depth_range"] = list(self.depth_range)
        d["image_size"] = list(self.image_size)
        return d


@dataclass(frozen=True, eq=False)
class Scene:
    config: SceneConfig
    K_source: np.ndarray
    K_target: np.ndarray
    pose: RelativePose
    baseline_vector: np.ndarray
    f_gt: np.ndarray
    points3d: np.ndarray
    correspondences: CorrespondenceSet
    inlier_mask: np.ndarray


def intrinsics(config):
    w, h = config.image_size
    return np.array([[config.focal_px, 0.0, w / 2.0], [0.0, config.focal_px, h / 2.0], [0.0, 0.0, 1.0]])


def _unit_vector(rng):
    while True:
        v = np.array([rng.normal(), rng.normal(), rng.normal()])
        n = np.linalg.norm(v)
        if n > 1e-8:
            return v / n


def axis_angle(axis, angle_rad):
    K = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    return np.eye(3) + math.sin(angle_rad) * K + (1.0 - math.cos(angle_rad)) * (K @ K)


def _project(K, X):
    x = X @ K.T
    return x[:2] / x[2]


def generate_scene(config):
    """Sample a scene; every random draw comes from ``PCG32(config.seed)``."""
    rng = PCG32(config.seed)
    w, h = config.image_size
    K = intrinsics(config)
    K_inv = np.linalg.inv(K)
    R = axis_angle(_unit_vector(rng), math.radians(config.rotation_deg))
    t = config.baseline * _unit_vector(rng)

    margin = min(3.0 * config.noise_px, 0.25 * min(w, h))
    near, far = config.depth_range
    points, x, xp = [], [], []
    attempts = 0
    while len(points) < config.n_points:
        attempts += 1
        if attempts > MAX_ATTEMPTS_PER_POINT * config.n_points:
            raise ConfigError("camera frusta do not overlap inside the depth range")
        u = rng.uniform(margin, w - margin)
        v = rng.uniform(margin, h - margin)
        depth = rng.uniform(near, far)
        X = depth * (K_inv @ np.array([u, v, 1.0]))
        X2 = R @ X + t
        if X2[2] <= 0:
            continue
        q = _project(K, X2)
        if not (margin <= q[0] <= w - margin and margin <= q[1] <= h - margin):
            continue
        points.append(X)
        x.append((u, v))
        xp.append(q)
    points = np.array(points)
    x = np.array(x, dtype=float)
    xp = np.array(xp, dtype=float)

    n = config.n_points
    outliers = rng.sample_without_replacement(n, config.n_outliers)
    mask = np.ones(n, dtype=bool)
    mask[outliers] = False
    for i in range(n):
        if mask[i]:
            x[i] += config.noise_px * np.array([rng.normal(), rng.normal()])
            xp[i] += config.noise_px * np.array([rng.normal(), rng.normal()])
        else:
            xp[i] = (rng.uniform(0.0, w), rng.uniform(0.0, h))
    np.clip(x[:, 0], 0.0, w, out=x[:, 0])
    np.clip(x[:, 1], 0.0, h, out=x[:, 1])
    np.clip(xp[:, 0], 0.0, w, out=xp[:, 0])
    np.clip(xp[:, 1], 0.0, h, out=xp[:, 1])

    mask.setflags(write=False)
    return Scene(
        config=config,
        K_source=K,
        K_target=K.copy(),
        pose=RelativePose(R=R, t=t / np.linalg.norm(t)),
        baseline_vector=t,
        f_gt=fundamental_from_poses(K, K, R, t),
        points3d=points,
        correspondences=CorrespondenceSet(x, xp),
        inlier_mask=mask,
    )


def oracle_weights(scene):
    """1 on inliers, 0 on outliers."""
    return scene.inlier_mask.astype(float)
