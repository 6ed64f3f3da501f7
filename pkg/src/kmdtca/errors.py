"""Exception hierarchy shared by the numerical modules and the CLI."""


class KmdTcaError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(KmdTcaError, ValueError):
    """Operands do not conform (dimension or column-count mismatch)."""


class NumericalError(KmdTcaError, ArithmeticError):
    """A numerical kernel failed or its preconditions do not hold numerically."""


class DefectiveMatrixError(NumericalError):
    """The matrix has no full set of eigenvectors."""


class FormatError(KmdTcaError, ValueError):
    """A serialized tensor or factor file is malformed."""
