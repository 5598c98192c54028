"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the CLI when it
writes the error JSON to standard error.
"""

from __future__ import annotations


class RDiagError(Exception):
    code = "rdiag_error"

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        self.context = context


class NonNormalized(RDiagError, ValueError):
    code = "non_normalized"


class NegativeSupport(RDiagError, ValueError):
    code = "negative_support"


class NegativeDensity(RDiagError, ValueError):
    code = "negative_density"


class NonIntegrable(RDiagError, ValueError):
    code = "non_integrable"


class DomainError(RDiagError, ValueError):
    code = "domain_error"


class OutOfWindow(DomainError):
    code = "out_of_window"


class OutOfRange(DomainError):
    code = "out_of_range"


class RegimeError(DomainError):
    code = "regime_error"


class DiracMeasure(RDiagError, ValueError):
    code = "dirac_measure"


class NoConvergence(RDiagError, ArithmeticError):
    code = "no_convergence"


class EigenFailure(RDiagError, ArithmeticError):
    code = "eigen_failure"


class InputError(RDiagError, ValueError):
    code = "input_error"


class ToleranceExceeded(RDiagError):
    code = "tolerance_exceeded"
