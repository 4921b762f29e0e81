"""Exception types shared across the package."""


class InvalidDimensionError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class BudgetExhaustedError(RuntimeError):
    """Raised when an evaluation is requested past the FE cap."""


class ShapeError(ValueError):
    pass


class NonFiniteGradientError(FloatingPointError):
    pass


class DecodeOverflowError(FloatingPointError):
    """The network produced a non-finite candidate."""


class TapeError(RuntimeError):
    pass


class SchemaError(ValueError):
    """A results CSV does not carry the expected columns."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"missing or malformed column: {column!r}")
