"""Exception and warning types shared across the package."""


class FSSCompError(Exception):
    """Base class for package errors."""


class ParameterError(FSSCompError, ValueError):
    """A physical or numerical parameter is outside its allowed range."""


class DegenerateInputError(FSSCompError, ValueError):
    """Input has zero norm or an otherwise flat objective."""


class GridMismatchError(FSSCompError, ValueError):
    """Two amplitudes (or an amplitude and a grid) are not on compatible grids."""


class ShiftRangeError(FSSCompError, ValueError):
    """Requested frequency shift exceeds half the grid span."""


class BoundaryLossError(FSSCompError, RuntimeError):
    """Too much probability mass crossed the grid boundary during a shift."""


class NumericError(FSSCompError, ArithmeticError):
    """A numerical precondition (e.g. positive semidefiniteness) failed."""


class BoundaryMassWarning(UserWarning):
    """Mass crossing the grid boundary exceeded the warning threshold."""


class GridCoverageWarning(UserWarning):
    """A grid does not comfortably cover the line shapes evaluated on it."""
