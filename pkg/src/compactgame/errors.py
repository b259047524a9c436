"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DegenerateSystemError(ArithmeticError):
    """The linear system defining a transition kernel is singular."""


class InfeasibleProfileError(ValueError):
    """A profile failed the feasibility scan; carries the scan report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, last_iterate=None, step=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.step = step
