"""Source recovery from space-time samples of linear dynamical systems."""

from .dynamics import ContinuousSystem, DiscreteSystem, GeneralSystem, closed_form, iterate, sample
from .estimators import FiniteSampleRecovery, InfiniteHorizonRecovery, TimeVaryingRecovery
from .exceptions import (
    ConfigError,
    DimensionError,
    DivergentTrajectoryError,
    DynSampError,
    EigenSolverError,
    IllConditionedError,
    NotAFrameError,
    NotStrongError,
    NumericalError,
    RecoverabilityError,
)
from .frames import FrameBounds, VectorSystem, bessel_bound, canonical_dual, frame_bounds_on
from .hilbert import Subspace, inner, norm, spectral_radius
from .measurement import DataMatrix, is_strong, limit_synthesis, norm_finite, norm_sup
from .recovery import (
    RecoveryReport,
    estimate_stability,
    least_squares_source,
    recover_continuous,
    recover_general_form,
    recover_infinite,
    recover_time_varying,
    recover_two_sample,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContinuousSystem",
    "DataMatrix",
    "DimensionError",
    "DiscreteSystem",
    "DivergentTrajectoryError",
    "DynSampError",
    "EigenSolverError",
    "FiniteSampleRecovery",
    "FrameBounds",
    "GeneralSystem",
    "IllConditionedError",
    "InfiniteHorizonRecovery",
    "NotAFrameError",
    "NotStrongError",
    "NumericalError",
    "RecoverabilityError",
    "RecoveryReport",
    "Subspace",
    "TimeVaryingRecovery",
    "VectorSystem",
    "bessel_bound",
    "canonical_dual",
    "closed_form",
    "estimate_stability",
    "frame_bounds_on",
    "inner",
    "is_strong",
    "iterate",
    "least_squares_source",
    "limit_synthesis",
    "norm",
    "norm_finite",
    "norm_sup",
    "recover_continuous",
    "recover_general_form",
    "recover_infinite",
    "recover_time_varying",
    "recover_two_sample",
    "sample",
    "spectral_radius",
]
