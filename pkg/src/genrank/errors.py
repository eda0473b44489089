"""Exception hierarchy shared by every genrank module."""


class GenrankError(Exception):
    """Base class for all errors raised by genrank."""


class StructuralError(GenrankError, ValueError):
    """Input data has the wrong shape or refers to nodes that do not exist."""


class DomainError(GenrankError, ValueError):
    """A value lies outside the domain an operation is defined on."""


class SolverError(GenrankError, ArithmeticError):
    """A direct factorization failed."""


class ConvergenceError(GenrankError, RuntimeError):
    """An iterative solve hit its iteration cap before reaching tolerance."""

    def __init__(self, message, iterations, residual):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
