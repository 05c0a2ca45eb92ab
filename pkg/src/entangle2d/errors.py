"""Exception types shared across the library."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EvaluationError(RuntimeError):
    """An integrand produced a non-finite value; the message names the node."""


class ConvergenceError(RuntimeError):
    """A refinement sweep failed to reach the requested tolerance.

    Carries the best value seen and the last inter-level difference so
    callers can decide whether the partial answer is usable.
    """

    def __init__(self, message, best_value=None, delta=None):
        super().__init__(message)
        self.best_value = best_value
        self.delta = delta


class DegenerateInputError(ValueError):
    """Input is structurally unusable (e.g. an identically zero potential)."""


class ResonanceError(RuntimeError):
    """The zero-energy kernel is numerically singular (half-bound state).

    Carries the condition number that tripped the gate.
    """

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class OracleUnreliableError(RuntimeError):
    """The radial-equation cross-check could not produce a trustworthy fit."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GridResolutionError(RuntimeError):
    """A momentum grid is too coarse for the requested purity computation."""
