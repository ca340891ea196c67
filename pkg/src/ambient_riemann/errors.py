"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`AmbientRiemannError` so callers (and the CLI) can catch a single base.
"""


class AmbientRiemannError(Exception):
    """Base class for all package errors."""


class InvalidInputError(AmbientRiemannError, ValueError):
    """Malformed arrays: wrong shape, empty, non-finite, mismatched dims."""


class InvalidParameterError(AmbientRiemannError, ValueError):
    """A scalar parameter is out of its admissible range."""


class InvalidMetricError(AmbientRiemannError, ValueError):
    """A metric operator is not symmetric / positive definite where required."""


class SingularSpanError(AmbientRiemannError, ArithmeticError):
    """The Gram matrix N^T g N of a spanning map is numerically singular."""


class OffManifoldError(AmbientRiemannError, ValueError):
    """A point fails the membership test of its structure."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IncompleteStructureError(AmbientRiemannError):
    """A structure lacks the data needed for the requested computation."""


class DegenerateTangentSpaceError(AmbientRiemannError, ArithmeticError):
    """Extraction of a tangent-space basis failed (rank deficiency)."""


class NonHorizontalError(AmbientRiemannError, ValueError):
    """A vector that must be horizontal has a vertical component."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class MembershipError(AmbientRiemannError, ValueError):
    """A double-tangent quadruple fails its bundle constraints."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class IntegrationError(AmbientRiemannError, ArithmeticError):
    """An ODE integration drifted off the manifold."""
