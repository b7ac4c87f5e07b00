"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`DynSampError` so callers (and the CLI) can map them to exit codes.
"""


class DynSampError(Exception):
    """Base class for library errors."""


class DimensionError(DynSampError, ValueError):
    """Shapes of vectors, operators or systems do not agree."""


class NumericalError(DynSampError, ArithmeticError):
    """A numerical routine failed or would return garbage."""


class IllConditionedError(NumericalError):
    """A linear solve was refused because the matrix is (nearly) singular."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(f"{message} (condition number {condition:.3e})")
        self.condition = condition


class EigenSolverError(NumericalError):
    pass


class DivergentTrajectoryError(NumericalError):
    def __init__(self, step, norm):
        super().__init__(f"divergent trajectory: |x_{step}| = {norm:.3e}")
        self.step = step
        self.norm = norm


class NotAFrameError(DynSampError):
    """A vector system fails the lower frame inequality on the target space."""

    def __init__(self, message, lower=0.0, upper=0.0):
        super().__init__(f"{message} (bounds lower={lower:.3e}, upper={upper:.3e})")
        self.lower = lower
        self.upper = upper


class RecoverabilityError(NotAFrameError):
    """The frame condition that characterises stable recovery does not hold."""


class NotStrongError(DynSampError):
    """Data matrix rows are not Cauchy within the requested tolerance."""

    def __init__(self, message, tail_gap=float("nan")):
        super().__init__(f"{message} (tail gap {tail_gap:.3e})")
        self.tail_gap = tail_gap


class ConfigError(DynSampError, ValueError):
    """Malformed experiment configuration."""
