"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the CLI for
its one-line stderr message.
"""


class QuarticFlowError(Exception):
    code = "QF_ERROR"


class ValidationError(QuarticFlowError):
    """Parameters violate a documented precondition."""

    code = "VALIDATION"


class NumericalError(QuarticFlowError):
    """A numerical procedure failed to reach its tolerance."""

    code = "NUMERICAL"


class NonPositiveA(ValidationError):
    code = "NON_POSITIVE_A"


class SingularA(NumericalError):
    code = "SINGULAR_A"


class IntegrationFailure(NumericalError):
    code = "INTEGRATION_FAILURE"


class BadParams(ValidationError):
    code = "BAD_PARAMS"


class InadmissibleP(ValidationError):
    code = "INADMISSIBLE_P"


class DegenerateCoordinate(ValidationError):
    code = "DEGENERATE_COORDINATE"


class OutOfChart(ValidationError):
    code = "OUT_OF_CHART"


class WindowOutsideChart(ValidationError):
    code = "WINDOW_OUTSIDE_CHART"


class WindowExit(NumericalError):
    code = "WINDOW_EXIT"

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NewtonDivergence(NumericalError):
    code = "NEWTON_DIVERGENCE"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InputOutputError(QuarticFlowError):
    """A required file is missing, unreadable or malformed."""

    code = "IO_ERROR"
