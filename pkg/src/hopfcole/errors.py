"""Exception types raised by the solvers and transforms."""


class HopfColeError(Exception):
    pass


class DomainError(HopfColeError, ValueError):
    """A parameter or argument outside its admissible range."""


class GridMismatchError(HopfColeError, ValueError):
    pass


class PositivityError(HopfColeError, ValueError):
    pass


class PreconditionError(HopfColeError, ValueError):
    pass


class AlignmentError(PreconditionError):
    """The flux nu Dm + h0 m |Du|^(r'-2) Du is too large for the forward map."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class SolverError(HopfColeError, RuntimeError):
    """Base for solver failures; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SolverFailure(SolverError):
    pass


class NonconvergenceError(SolverError):
    pass


class SingularJacobianError(SolverError):
    pass


class ConfigError(HopfColeError, ValueError):
    pass
