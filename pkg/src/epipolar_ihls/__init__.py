"""Outlier-robust two-view geometry with an IHLS solver and implicit gradients."""

from .estimators import EightPointFundamental, IHLSFundamental, RansacEightPoint, RecurrentRefinement
from .exceptions import (
    AmbiguousPoseError,
    ConfigError,
    DegenerateConfigurationError,
    InvalidInputError,
    NumericError,
    ParseError,
    PreconditionError,
    SingularSystemError,
    UnderdeterminedError,
)
from .geometry import CorrespondenceSet, build_observation_matrix, canonicalize_f, f_distance
from .ihls import IhlsConfig, IhlsResult, eight_point, ihls_solve, solve_fundamental
from .implicit_grad import Theta, ThetaGrads, implicit_backward
from .metrics import pose_auc, pose_error, sampson_distance, symmetric_epipolar_distance
from .pipeline import RefinementConfig, ransac_eight_point, run_pipeline
from .pose import recover_pose
from .robust_loss import RobustParams
from .synth import SceneConfig, generate_scene

__version__ = "0.1.0"

__all__ = [
    "AmbiguousPoseError",
    "ConfigError",
    "CorrespondenceSet",
    "DegenerateConfigurationError",
    "EightPointFundamental",
    "IHLSFundamental",
    "IhlsConfig",
    "IhlsResult",
    "InvalidInputError",
    "NumericError",
    "ParseError",
    "PreconditionError",
    "RansacEightPoint",
    "RecurrentRefinement",
    "RefinementConfig",
    "RobustParams",
    "SceneConfig",
    "SingularSystemError",
    "Theta",
    "ThetaGrads",
    "UnderdeterminedError",
    "build_observation_matrix",
    "canonicalize_f",
    "eight_point",
    "f_distance",
    "generate_scene",
    "ihls_solve",
    "implicit_backward",
    "pose_auc",
    "pose_error",
    "ransac_eight_point",
    "recover_pose",
    "run_pipeline",
    "sampson_distance",
    "solve_fundamental",
    "symmetric_epipolar_distance",
]
