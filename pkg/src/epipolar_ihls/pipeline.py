"""Recurrent weighted estimation: initial weighted 8-point solve followed by
rounds of residual-driven reweighting and IHLS, plus a RANSAC baseline.

The learned weight predictors of the original framework are replaced by
analytic ``WeightUpdater`` callables. Any object with the same call
signature can be plugged in.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DegenerateConfigurationError, UnderdeterminedError
from .geometry import MIN_POINTS, check_weights
from .ihls import IhlsConfig, eight_point, solve_fundamental
from .metrics import symmetric_epipolar_distance
from .numerics import NumericError
from .rng import PCG32

_SCALE_FLOOR = 1e-12


def _ensure_support(weights, residuals):
    """Give weight 1 to the 8 best residuals if fewer than 8 weights are positive."""
    finite = np.isfinite(residuals)
    if np.count_nonzero(weights > 0) >= MIN_POINTS or np.count_nonzero(finite) < MIN_POINTS:
        return weights
    order = np.argsort(np.where(finite, residuals, np.inf), kind="stable")
    weights = weights.copy()
    weights[order[:MIN_POINTS]] = 1.0
    return weights


def _distances(residuals):
    r = np.asarray(residuals, dtype=float)
    return r, np.sqrt(np.where(np.isfinite(r), r, np.inf))


class WeightUpdater:
    """Maps squared epipolar residuals to weights in ``[0, 1]``."""

    name = "base"

    def weights(self, residuals, distances):
        raise NotImplementedError

    def __call__(self, residuals, x=None, xp=None, side_info=None):
        r, d = _distances(residuals)
        w = np.where(np.isfinite(r), self.weights(r, d), 0.0)
        return _ensure_support(np.clip(w, 0.0, 1.0), r)


class UniformUpdater(WeightUpdater):
    name = "uniform"

    def weights(self, residuals, distances):
        return np.ones_like(residuals)


@dataclass
class CauchyUpdater(WeightUpdater):
    """``1 / (1 + d^2 / c^2)`` with ``c = scale_factor * median(d)``.

    ``d`` is the epipolar distance, i.e. the square root of the symmetric
    epipolar residual, so ``d^2`` is the residual itself.
    """

    scale_factor: float = 1.5
    scale: float | None = None
    name = "cauchy"

    def weights(self, residuals, distances):
        c = self.scale
        if c is None:
            c = self.scale_factor * np.median(distances)
        c = max(c, _SCALE_FLOOR)
        return 1.0 / (1.0 + residuals / (c * c))


@dataclass
class TukeyUpdater(WeightUpdater):
    """Tukey biweight with ``c = tuning * 1.4826 * median(d)``."""

    tuning: float = 4.685
    name = "tukey"

    def weights(self, residuals, distances):
        c = max(self.tuning * 1.4826 * np.median(distances), _SCALE_FLOOR)
        z = distances / c
        return np.where(z < 1.0, (1.0 - z * z) ** 2, 0.0)


@dataclass
class HardThresholdUpdater(WeightUpdater):
    """1 where the squared residual is below ``threshold``, else 0."""

    threshold: float = 8.0
    name = "threshold"

    def weights(self, residuals, distances):
        return (residuals < self.threshold).astype(float)


UPDATERS = {
    "uniform": UniformUpdater,
    "cauchy": CauchyUpdater,
    "tukey": TukeyUpdater,
    "threshold": HardThresholdUpdater,
}


def make_updater(choice):
    if isinstance(choice, WeightUpdater) or callable(choice) and not isinstance(choice, (str, dict)):
        return choice
    if isinstance(choice, str):
        choice = {"name": choice}
    choice = dict(choice)
    name = choice.pop("name")
    if name not in UPDATERS:
        raise ConfigError(f"unknown updater {name!r}; choose from {sorted(UPDATERS)}")
    return UPDATERS[name](**choice)


INITIAL_SOURCES = ("auto", "uniform", "provided", "side-info")


@dataclass
class RefinementConfig:
    m_iterations: int = 2
    updater: object = "cauchy"
    initial_weights: str = "auto"
    ihls: IhlsConfig = field(default_factory=IhlsConfig)

    def __post_init__(self):
        if int(self.m_iterations) != self.m_iterations or self.m_iterations < 0:
            raise ConfigError("m_iterations must be a nonnegative integer")
        if self.initial_weights not in INITIAL_SOURCES:
            raise ConfigError(f"initial_weights must be one of {INITIAL_SOURCES}")
        self.updater = make_updater(self.updater)


@dataclass
class PipelineResult:
    f_per_round: list
    weights_per_round: list
    diagnostics: list

    @property
    def F(self):
        return self.f_per_round[-1]

    @property
    def final_weights(self):
        return self.weights_per_round[-1]


def initial_weights(corr, source="auto"):
    n = len(corr)
    if source == "uniform":
        return np.ones(n)
    if source == "provided" or (source == "auto" and corr.weights is not None):
        if corr.weights is None:
            raise ConfigError("initial_weights='provided' but the set carries no weights")
        return corr.weights.copy()
    if source == "side-info" or (source == "auto" and corr.side_info is not None):
        if corr.side_info is None:
            raise ConfigError("initial_weights='side-info' but the set carries no side info")
        # first feature column is the match confidence
        return check_weights(corr.side_info[:, 0], n)
    return np.ones(n)


def initial_solve(corr, gamma0=None):
    """Weighted normalized 8-point solve, rank-2 projected."""
    gamma0 = np.ones(len(corr)) if gamma0 is None else gamma0
    return eight_point(corr, check_weights(gamma0, len(corr), min_positive=MIN_POINTS))


def refine_round(corr, F_prev, updater, ihls_config=None):
    """One reweighting round: residuals of ``F_prev`` -> weights -> IHLS.

    IHLS is warm-started from ``F_prev``. Returns ``(F, gamma, IhlsResult)``.
    """
    r = symmetric_epipolar_distance(F_prev, corr.x, corr.xp)
    gamma = np.asarray(updater(r, corr.x, corr.xp, corr.side_info), dtype=float)
    F, result = solve_fundamental(corr, ihls_config, weights=gamma, F_init=F_prev)
    return F, gamma, result


def run_pipeline(corr, config=None):
    config = config or RefinementConfig()
    gamma = initial_weights(corr, config.initial_weights)
    F = initial_solve(corr, gamma)
    fs, gammas, diags = [F], [gamma], [None]
    for _ in range(config.m_iterations):
        F, gamma, result = refine_round(corr, F, config.updater, config.ihls)
        fs.append(F)
        gammas.append(gamma)
        diags.append(result)
    return PipelineResult(f_per_round=fs, weights_per_round=gammas, diagnostics=diags)


@dataclass
class RansacResult:
    F: np.ndarray | None
    inlier_mask: np.ndarray
    iterations: int

    @property
    def success(self):
        return self.F is not None

    @property
    def n_inliers(self):
        return int(np.count_nonzero(self.inlier_mask))


def _ransac_inliers(F, corr, threshold_px):
    # both point-to-line distances below the threshold bounds SED by 2 thr^2
    sed = symmetric_epipolar_distance(F, corr.x, corr.xp)
    return sed <= 2.0 * threshold_px * threshold_px


def ransac_eight_point(corr, iterations=1000, inlier_threshold_px=3.0, seed=0, confidence=0.999):
    """Hypothesize-and-verify with minimal 8-point samples.

    Stops early once ``confidence`` of having drawn an all-inlier sample is
    reached under the current inlier ratio. The winner is re-estimated on
    its inlier set.
    """
    n = len(corr)
    if n < MIN_POINTS:
        raise UnderdeterminedError(f"need at least {MIN_POINTS} pairs, got {n}")
    rng = PCG32(seed)
    best_mask = np.zeros(n, dtype=bool)
    budget = iterations
    it = 0
    while it < budget:
        it += 1
        sample = corr.subset(rng.sample_without_replacement(n, MIN_POINTS))
        try:
            F = eight_point(sample)
        except (DegenerateConfigurationError, NumericError):
            continue
        mask = _ransac_inliers(F, corr, inlier_threshold_px)
        if mask.sum() > best_mask.sum():
            best_mask = mask
            ratio = mask.mean()
            if ratio >= 1.0:
                budget = min(budget, it)
            else:
                denom = np.log1p(-(ratio**MIN_POINTS))
                if denom < 0:
                    budget = min(budget, int(np.ceil(np.log1p(-confidence) / denom)))
    if best_mask.sum() < MIN_POINTS:
        return RansacResult(F=None, inlier_mask=best_mask, iterations=it)
    F = eight_point(corr.subset(np.flatnonzero(best_mask)))
    return RansacResult(F=F, inlier_mask=_ransac_inliers(F, corr, inlier_threshold_px), iterations=it)
