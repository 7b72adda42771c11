"""Exception types shared across the library."""


class ShapeCorrError(Exception):
    """Base class for all library errors."""


class ParseError(ShapeCorrError):
    """A mesh or data file could not be parsed."""


class ValidationError(ShapeCorrError):
    """A parsed mesh violates a structural invariant."""


class DisconnectedError(ValidationError):
    """A vertex is unreachable on the edge graph."""


class DimensionError(ShapeCorrError):
    """Array arguments have inconsistent shapes."""


class ConvergenceError(ShapeCorrError):
    """An iterative solver failed to reach its tolerance in budget."""


class DegenerateSpectrumError(ShapeCorrError):
    """The eigenvalue spectrum cannot support the requested construction."""


class SingularCoreError(ShapeCorrError):
    """A kernel core matrix is numerically singular at working precision."""


class SizeGuardError(ShapeCorrError):
    """A test-only dense routine was called above its size guard."""
