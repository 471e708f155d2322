"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses without inspecting messages.
"""


class NetcoxError(Exception):
    exit_code = 1


class ValidationError(NetcoxError, ValueError):
    """Input failed a structural or parameter check."""

    exit_code = 2


class NumericalError(NetcoxError, ArithmeticError):
    """A numerical routine failed or produced an unusable result."""

    exit_code = 3


class InputOutputError(NetcoxError, OSError):
    exit_code = 4


# network
class DisconnectedNetwork(ValidationError):
    pass


class SegmentOverlap(ValidationError):
    pass


class ZeroLengthSegment(ValidationError):
    pass


class OffsetOutOfRange(ValidationError):
    pass


class NotATree(ValidationError):
    pass


# metrics
class SingularMatrix(NumericalError):
    pass


class UndefinedAtKink(ValidationError):
    pass


class RadiusBeyondNetwork(ValidationError):
    pass


# covariance / simulation
class InvalidParameters(ValidationError):
    pass


class NotPositiveSemidefinite(NumericalError):
    pass


class InvalidModel(ValidationError):
    pass


# inference
class EmptyPattern(ValidationError):
    pass


class BandwidthNonpositive(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class OptimizerFailed(NumericalError):
    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause


class ParseError(InputOutputError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
