"""scikit-learn style wrappers around the solvers.

Inputs are ``(N, 4)`` arrays of ``x, y, x', y'`` pixel coordinates. After
``fit`` every estimator exposes the rank-2 fundamental matrix as ``F_``.
Pairs are scored by Sampson distance; ``predict`` labels them ``+1``
(inlier) or ``-1`` (outlier) against ``inlier_threshold_px``, following
the outlier-detector convention.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .geometry import MIN_POINTS, CorrespondenceSet, canonicalize_f
from .ihls import IhlsConfig, eight_point, solve_fundamental
from .metrics import sampson_distance
from .pipeline import RefinementConfig, ransac_eight_point, run_pipeline
from .robust_loss import RobustParams


def _check_pairs(X, estimator):
    X = check_array(X, dtype=float, ensure_min_samples=MIN_POINTS, estimator=estimator)
    if X.shape[1] != 4:
        raise ValueError(f"expected 4 columns (x, y, xp, yp), got {X.shape[1]}")
    return X


class _FundamentalEstimator(BaseEstimator):
    inlier_threshold_px = 3.0

    def fit(self, X, y=None, sample_weight=None):
        X = _check_pairs(X, self)
        self.n_features_in_ = 4
        corr = CorrespondenceSet.from_array(X, weights=sample_weight)
        self.F_ = canonicalize_f(self._fit(corr))
        return self

    def _fit(self, corr):
        raise NotImplementedError

    def _distances(self, X):
        check_is_fitted(self, "F_")
        X = _check_pairs(X, self)
        return sampson_distance(self.F_, X[:, :2], X[:, 2:])

    def transform(self, X):
        """Sampson distance of each pair as an ``(N, 1)`` column."""
        return self._distances(X)[:, None]

    def fit_transform(self, X, y=None, sample_weight=None):
        return self.fit(X, y, sample_weight=sample_weight).transform(X)

    def score_samples(self, X):
        return -self._distances(X)

    def decision_function(self, X):
        return self.inlier_threshold_px - np.sqrt(self._distances(X))

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, 1, -1)

    def score(self, X, y=None):
        """Negative median Sampson distance (higher is better)."""
        return -float(np.median(self._distances(X)))


class EightPointFundamental(_FundamentalEstimator):
    """Normalized (weighted) 8-point algorithm."""

    def __init__(self, inlier_threshold_px=3.0):
        self.inlier_threshold_px = inlier_threshold_px

    def _fit(self, corr):
        return eight_point(corr)


class IHLSFundamental(_FundamentalEstimator):
    """Robust fit by iterative homogeneous least squares.

    Examples
    --------
    >>> from epipolar_ihls.synth import SceneConfig, generate_scene
    >>> scene = generate_scene(SceneConfig(noise_px=0.0, seed=3))
    >>> est = IHLSFundamental().fit(scene.correspondences.to_array())
    >>> bool(est.result_.converged)
    True
    """

    def __init__(self, p=0.5, eps=1e-6, max_iters=100, tol=1e-10, inlier_threshold_px=3.0):
        self.p = p
        self.eps = eps
        self.max_iters = max_iters
        self.tol = tol
        self.inlier_threshold_px = inlier_threshold_px

    def _config(self):
        return IhlsConfig(RobustParams(self.p, self.eps), max_iters=self.max_iters, tol=self.tol)

    def _fit(self, corr):
        F, self.result_ = solve_fundamental(corr, self._config())
        self.n_iter_ = self.result_.iterations
        return F


class RecurrentRefinement(IHLSFundamental):
    """Weighted 8-point start followed by ``m_iterations`` reweighting rounds."""

    def __init__(self, m_iterations=2, updater="cauchy", p=0.5, eps=1e-6, max_iters=100,
                 tol=1e-10, inlier_threshold_px=3.0):
        super().__init__(p=p, eps=eps, max_iters=max_iters, tol=tol,
                         inlier_threshold_px=inlier_threshold_px)
        self.m_iterations = m_iterations
        self.updater = updater

    def _fit(self, corr):
        config = RefinementConfig(
            m_iterations=self.m_iterations, updater=self.updater, ihls=self._config()
        )
        self.result_ = run_pipeline(corr, config)
        self.weights_ = self.result_.final_weights
        return self.result_.F


class RansacEightPoint(_FundamentalEstimator):
    """Hypothesize-and-verify baseline; ``inlier_mask_`` holds the consensus set."""

    def __init__(self, iterations=1000, inlier_threshold_px=3.0, seed=0):
        self.iterations = iterations
        self.inlier_threshold_px = inlier_threshold_px
        self.seed = seed

    def _fit(self, corr):
        result = ransac_eight_point(corr, self.iterations, self.inlier_threshold_px, self.seed)
        if not result.success:
            raise ValueError("RANSAC found no hypothesis with at least 8 inliers")
        self.inlier_mask_ = result.inlier_mask
        self.n_iter_ = result.iterations
        return result.F
