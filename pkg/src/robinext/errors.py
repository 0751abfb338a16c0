"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class InvalidShapeError(ValueError):
    """Radial function is not strictly positive."""


class HypothesisError(ValueError):
    """Geometric hypotheses of a bound are not met.

    ``failed`` lists the names of the violated flags.
    """

    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("hypotheses not satisfied: " + ", ".join(self.failed))


class RootFindingError(RuntimeError):
    """A transcendental equation could not be bracketed."""


class ConvergenceError(RuntimeError):
    """An iterative method or quadrature failed its own error estimate."""


class FactorizationError(RuntimeError):
    """Shifted matrix could not be factorized."""
