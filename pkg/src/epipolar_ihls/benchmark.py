"""Seeded synthetic benchmark: per-trial pose errors and AUC tables.

Trial ``k`` draws its scene (and RANSAC stream) from seed ``seed + k``, so
results depend only on the configuration. Output dictionaries contain
plain Python scalars and serialize identically on every run.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import AmbiguousPoseError, ConfigError, InvalidInputError, NumericError
from .ihls import IhlsConfig, eight_point, solve_fundamental
from .metrics import DEFAULT_THRESHOLDS, pose_auc, pose_error
from .pipeline import RefinementConfig, ransac_eight_point, run_pipeline
from .pose import recover_pose
from .robust_loss import RobustParams
from .synth import SceneConfig, generate_scene, oracle_weights

METHODS = ("least-squares", "ihls", "pipeline", "ransac", "oracle")


def ihls_config_from_dict(d):
    d = dict(d or {})
    params = RobustParams(p=d.pop("p", RobustParams.p), eps=d.pop("eps", RobustParams.eps))
    try:
        return IhlsConfig(params=params, **d)
    except TypeError as exc:
        raise ConfigError(f"bad ihls config: {exc}") from None


def refinement_config_from_dict(d):
    d = dict(d or {})
    ihls = ihls_config_from_dict(d.pop("ihls", None))
    try:
        return RefinementConfig(ihls=ihls, **d)
    except TypeError as exc:
        raise ConfigError(f"bad pipeline config: {exc}") from None


@dataclass
class ExperimentConfig:
    scene: dict = field(default_factory=lambda: {"n_points": 200, "noise_px": 1.0, "outlier_fraction": 0.4})
    pipeline: dict = field(default_factory=dict)
    trials: int = 100
    methods: list = field(default_factory=lambda: list(METHODS))
    seed: int = 0
    thresholds: list = field(default_factory=lambda: list(DEFAULT_THRESHOLDS))
    ransac: dict = field(default_factory=lambda: {"iterations": 1000, "inlier_threshold_px": 3.0})
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        unknown = sorted(set(self.methods) - set(METHODS))
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        # validate eagerly so errors surface before any trial runs
        self.scene_config(0)
        refinement_config_from_dict(self.pipeline)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad experiment config: {exc}") from None

    def to_dict(self):
        return asdict(self)

    def scene_config(self, trial):
        d = dict(self.scene)
        d["seed"] = self.seed + trial
        try:
            return SceneConfig(**d)
        except TypeError as exc:
            raise ConfigError(f"bad scene config: {exc}") from None


def _estimate(method, scene, config, trial):
    corr = scene.correspondences
    if method == "least-squares":
        return eight_point(corr)
    if method == "ihls":
        return solve_fundamental(corr, refinement_config_from_dict(config.pipeline).ihls)[0]
    if method == "pipeline":
        return run_pipeline(corr, refinement_config_from_dict(config.pipeline)).F
    if method == "oracle":
        ihls = refinement_config_from_dict(config.pipeline).ihls
        return solve_fundamental(corr, ihls, weights=oracle_weights(scene))[0]
    result = ransac_eight_point(corr, seed=config.seed + trial, **config.ransac)
    if not result.success:
        raise NumericError("RANSAC found no hypothesis with 8 inliers")
    return result.F


def run_trial(config, trial):
    scene = generate_scene(config.scene_config(trial))
    corr = scene.correspondences
    mask = scene.inlier_mask
    record = {"trial": trial, "seed": config.seed + trial, "methods": {}}
    for method in config.methods:
        try:
            F = _estimate(method, scene, config, trial)
            # cheirality is voted on the true inliers so the error measures F alone
            pose = recover_pose(F, corr.x[mask], corr.xp[mask], scene.K_source, scene.K_target)
            err = pose_error(pose.R, pose.t, scene.pose.R, scene.pose.t)
            entry = {"rot_deg": err.rot_deg, "trans_deg": err.trans_deg, "max_deg": err.max_deg}
        except (InvalidInputError, NumericError, AmbiguousPoseError, np.linalg.LinAlgError) as exc:
            entry = {"error": f"{type(exc).__name__}: {exc}", "max_deg": None}
        record["methods"][method] = entry
    return record


def _trial_star(args):
    return run_trial(*args)


def summarize(records, methods, thresholds):
    table = {}
    for method in methods:
        errs = [r["methods"][method]["max_deg"] for r in records]
        errs = np.array([np.inf if e is None else e for e in errs], dtype=float)
        rot = np.array([r["methods"][method].get("rot_deg", np.inf) for r in records])
        aucs = pose_auc(errs, thresholds)
        table[method] = {
            "auc": {f"{t:g}": a for t, a in zip(thresholds, aucs)},
            "median_rot_deg": float(np.median(rot)),
            "median_max_deg": float(np.median(errs)),
            "failures": int(np.count_nonzero(~np.isfinite(errs))),
        }
    return table


def run_benchmark(config):
    """Run all trials; returns the results dictionary."""
    jobs = [(config, k) for k in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_trial_star, jobs))
    else:
        records = [run_trial(*job) for job in jobs]
    records.sort(key=lambda r: r["trial"])
    settings = config.to_dict()
    settings.pop("out", None)
    settings.pop("workers", None)
    return {
        "config": settings,
        "summary": summarize(records, config.methods, config.thresholds),
        "trials": records,
    }
