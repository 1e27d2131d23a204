"""Exceptions shared across modules."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its budget.

    ``violation`` carries the final constraint violation or optimality gap
    reached, when the solver can report one.
    """

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation
