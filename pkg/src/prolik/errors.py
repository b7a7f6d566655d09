"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the CLI copies into
its JSON report.
"""


class ProlikError(Exception):
    code = "error"


class DomainError(ProlikError, ValueError):
    code = "domain"


class InsufficientDataError(ProlikError, ValueError):
    code = "insufficient_data"


class SingularSystemError(ProlikError, ArithmeticError):
    code = "singular_system"

    def __init__(self, message, pivot=0.0):
        super().__init__(message)
        self.pivot = pivot


class RankError(ProlikError, ArithmeticError):
    code = "rank_deficient"


class CurvatureError(ProlikError, ArithmeticError):
    code = "curvature"


class ConvergenceError(ProlikError, RuntimeError):
    code = "convergence"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class UnboundedError(ProlikError, RuntimeError):
    code = "unbounded"


class UnsupportedModelError(ProlikError, TypeError):
    code = "unsupported_model"


class FieldError(ProlikError, RuntimeError):
    """A vector field could not be evaluated; integration halts."""

    code = "field_failure"


class StiffnessError(ProlikError, RuntimeError):
    code = "stiffness"

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class DegenerateRangeError(ProlikError, ValueError):
    code = "degenerate_range"


class SchemaError(ProlikError, ValueError):
    code = "schema"


class EmptyDataError(ProlikError, ValueError):
    code = "empty_data"
