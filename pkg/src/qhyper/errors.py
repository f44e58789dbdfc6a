"""Exception types shared across the package.

Everything derives from QHyperError so callers can catch numerical trouble
from this library without swallowing unrelated bugs.
"""


class QHyperError(Exception):
    pass


class DivisionByZero(QHyperError, ZeroDivisionError):
    """A q-shifted factorial with negative index hit a vanishing factor."""


class DomainError(QHyperError, ValueError):
    """Parameters violate a precondition (convergence region, q range, ...)."""


class TermEvaluationError(QHyperError, ArithmeticError):
    """A series term could not be evaluated at some multi-index."""


class NonFinite(QHyperError, ArithmeticError):
    """A term or partial sum became inf/nan."""


class NoConvergence(QHyperError, ArithmeticError):
    """A sum hit its hard cap without meeting the stall criterion."""


class PoleHit(QHyperError, ArithmeticError):
    """A Jackson-integral lattice point landed on (or too near) a pole."""


class SamplerExhausted(QHyperError, RuntimeError):
    """Rejection sampling failed to find admissible parameters."""
