"""Exception hierarchy.

Validation problems derive from ``ValueError`` (CLI exit code 2); numerical
failures of the solvers derive from ``RuntimeError`` (CLI exit code 3).
"""


class HillGapError(Exception):
    code = "HillGapError"
    exit_code = 2


class ValidationError(HillGapError, ValueError):
    code = "ValidationError"


class DuplicateIndex(ValidationError):
    code = "DuplicateIndex"


class RealnessViolation(ValidationError):
    code = "RealnessViolation"

    def __init__(self, k, message=None):
        self.k = k
        super().__init__(message or f"coefficients at k={k} and k={-k} are not complex conjugates")


class ParityMismatch(ValidationError):
    code = "ParityMismatch"


class SupportTooSmall(ValidationError):
    code = "SupportTooSmall"


class NotHermitian(ValidationError):
    code = "NotHermitian"


class StepCountTooSmall(ValidationError):
    code = "StepCountTooSmall"


class NonPositiveValues(ValidationError):
    code = "NonPositiveValues"


class RangeTooShort(ValidationError):
    code = "RangeTooShort"


class InsufficientData(ValidationError):
    code = "InsufficientData"


class NumericalFailure(HillGapError, RuntimeError):
    code = "NumericalFailure"
    exit_code = 3


class InterlacingViolation(NumericalFailure):
    code = "InterlacingViolation"


class NoConvergence(NumericalFailure):
    code = "NoConvergence"

    def __init__(self, message, deltas=None):
        self.deltas = deltas
        super().__init__(message)


class BracketingFailure(NumericalFailure):
    code = "BracketingFailure"


class WronskianDrift(NumericalFailure):
    code = "WronskianDrift"
