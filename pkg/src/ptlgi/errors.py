"""Exception types raised by the simulation and optimization routines."""


class PTLGIError(Exception):
    """Base class for all package errors."""


class DomainError(PTLGIError, ValueError):
    """Input outside the domain of an operation (non-finite, inconsistent, ...)."""


class NumericalError(PTLGIError, ArithmeticError):
    """A computation failed for numerical reasons."""


class EvolutionDegenerateError(NumericalError):
    """Normalization of a non-Hermitian evolution vanished."""


class StiffnessError(NumericalError):
    """Adaptive integrator step size fell below the underflow limit."""


class InternalInconsistencyError(NumericalError):
    """A quantity that must be non-negative came out clearly negative."""


class PostSelectionError(NumericalError):
    """The post-selected block has (numerically) zero weight."""


class EquivalenceError(NumericalError):
    """Post-selected three-level dynamics disagrees with the qubit dynamics."""
