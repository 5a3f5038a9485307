"""Exception types shared across the package."""


class CbdpError(Exception):
    """Base class for all package-specific errors."""


class PositivityError(CbdpError):
    """An operation required strictly positive probabilities or weights."""


class PathInconsistency(CbdpError):
    """Reversibility path products disagree; the kernel is not commuting."""


class ClassInconsistency(CbdpError):
    """Edge weights vary within a parallel class beyond tolerance."""


class ConvergenceError(CbdpError):
    """An iterative eigensolver failed to reach its tolerance."""


class NotStochastic(CbdpError):
    """The chain's row sums deviate from 1 beyond tolerance."""


class BudgetExceeded(CbdpError):
    """A configurable element/pair/node cap was hit; result is inconclusive."""


class DimensionMismatch(CbdpError):
    """A vector or matrix has the wrong dimensions for the operation."""
