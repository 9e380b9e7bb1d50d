"""Exception types shared across the package."""


class DimensionError(ValueError):
    pass


class NotMonotoneError(ValueError):
    """A linear operator whose symmetric part is not positive semidefinite."""


class NotResolvable(Exception):
    """The operator falls outside the class this package can resolve."""


class NoConvergence(RuntimeError):
    """An iterative solve hit its iteration cap; ``report`` holds the best iterate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EmptyGraph(ValueError):
    pass


class AllInfinite(ValueError):
    pass


class UnsupportedValue(ValueError):
    """Pointwise evaluation has no closed form for this operator variant."""
