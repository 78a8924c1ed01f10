"""Exception hierarchy shared by every covest module."""


class CovestError(Exception):
    """Base class for all errors raised by covest."""


class ParameterError(CovestError, ValueError):
    """A preset or operation parameter is outside its valid range."""


class GridError(CovestError, ValueError):
    """A grid is malformed (non-uniform, too small, wrong size)."""


class GridTooNarrowError(GridError):
    """The grid truncates too much mass, or mass piles up at its boundary."""


class DomainError(CovestError, ValueError):
    """Argument outside the mathematical domain of a function."""


class RangeError(CovestError, ValueError):
    """A requested shift or evaluation point is not representable on the grid."""


class NotCenterableError(CovestError):
    """The first moment is infinite or undefined."""


class InapplicableError(CovestError):
    """The operation requires finite variance but the density has none."""


class DegeneratePosteriorError(CovestError):
    """The samples are incompatible with the density (zero likelihood)."""


class WindowError(CovestError, ValueError):
    """A density falls below the floor inside the requested window."""
