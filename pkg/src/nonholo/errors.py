"""Exception types shared across the package."""


class NonholoError(Exception):
    """Base class for every package-specific error."""


class DimensionError(NonholoError, ValueError):
    """Operands live on incompatible spaces (wrong n, shape, or length)."""


class ParameterError(NonholoError, ValueError):
    """A parameter is outside its admissible range (e.g. eps == 0)."""


class DefinitenessError(NonholoError):
    """A matrix that must be positive definite is not."""


class SingularityError(NonholoError):
    """A Gram matrix, frame, or density argument is numerically degenerate."""


class UnsupportedSpecError(NonholoError, ValueError):
    """An inertia operator kind outside a formula's domain of validity."""


class StiffnessError(NonholoError):
    """Adaptive step size underflowed; the problem looks stiff at this tolerance."""


class ConstraintDriftError(NonholoError):
    """Constraint violation along a trajectory exceeded the allowed drift."""


class IntegrationAbort(NonholoError):
    """Integration stopped early; carries the abort time and the original cause."""

    def __init__(self, t, cause):
        super().__init__(f"integration aborted at t={t:.6g}: {cause}")
        self.t = t
        self.cause = cause


class ConfigError(NonholoError, ValueError):
    """A run configuration failed validation."""
