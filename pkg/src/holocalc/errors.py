"""Exception hierarchy shared by every holocalc operation."""


class HolocalcError(Exception):
    """Base class for all library errors."""


class PreconditionError(HolocalcError, ValueError):
    """An operation was called outside its domain of validity."""


class DimensionError(PreconditionError):
    pass


class ContourError(PreconditionError):
    """No Cauchy contour with the requested separation exists."""


class SingularResolventError(PreconditionError):
    """lambda*I - T is singular to working precision."""


class ConvergenceError(HolocalcError, ArithmeticError):
    """An iterative or adaptive procedure failed to converge within budget."""
