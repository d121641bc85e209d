"""Exception hierarchy.

Every error carries a stable ``code`` string; the CLI reports it verbatim.
"""


class PopKolmoError(Exception):
    code = "PopKolmoError"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update(self.details)
        return out


class ValidationError(PopKolmoError, ValueError):
    """Input that does not satisfy a documented contract."""

    code = "ValidationError"


class NonSquare(ValidationError):
    code = "NonSquare"


class NegativeOffDiagonal(ValidationError):
    code = "NegativeOffDiagonal"


class ColumnSumNonZero(ValidationError):
    code = "ColumnSumNonZero"


class DimensionMismatch(ValidationError):
    code = "DimensionMismatch"


class GridMismatch(ValidationError):
    code = "GridMismatch"


class SampleMismatch(ValidationError):
    code = "SampleMismatch"


class EmptyPopulation(ValidationError):
    code = "EmptyPopulation"


class NumericalError(PopKolmoError, ArithmeticError):
    code = "NumericalError"


class NoConvergence(NumericalError):
    code = "NoConvergence"


class Overflow(NumericalError):
    code = "Overflow"


class NonFiniteState(PopKolmoError, FloatingPointError):
    """Raised when a simulation produces NaN or infinite densities."""

    code = "NonFiniteState"
