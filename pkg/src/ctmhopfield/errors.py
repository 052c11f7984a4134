"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes of two inputs are incompatible."""


class UndefinedMetricError(ValueError):
    """A metric was requested on inputs for which it is not defined."""


class NumericalFailure(ArithmeticError):
    """An iterate became non-finite during fixed-point iteration.

    Attributes:
        step: Index of the update that produced the non-finite iterate.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite iterate produced at step {step}")
