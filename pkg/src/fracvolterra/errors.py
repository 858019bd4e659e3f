"""Exception hierarchy.

Three roots map onto the CLI exit codes: bad parameters (2), numerical
failures (3) and violated sharpness-experiment preconditions (4).
"""


class FracVolterraError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(FracVolterraError, ValueError):
    """An input violates a documented inequality or range."""


class NumericalError(FracVolterraError, RuntimeError):
    """A numerical procedure failed to deliver its contract."""


# --- parameter plan -------------------------------------------------------

class OrderViolation(ParameterError):
    pass


class StrictRegimeViolation(ParameterError):
    pass


class P2OutOfRange(ParameterError):
    pass


class ZetaOutOfRange(ParameterError):
    pass


class PlanInconsistent(NumericalError):
    """A freshly built plan broke one of its invariants (a bug, not bad input)."""


class EmptyGrid(ParameterError):
    pass


# --- bihari ---------------------------------------------------------------

class SingularIntegrand(ParameterError):
    pass


class GridTooShort(ParameterError):
    pass


# --- problems -------------------------------------------------------------

class NonpositiveTau(ParameterError):
    pass


class NonpositiveX0(ParameterError):
    pass


class MuOutOfRange(ParameterError):
    pass


class EpsilonTooLarge(ParameterError):
    pass


# --- solver ---------------------------------------------------------------

class BadMeshParams(ParameterError):
    pass


class StepDivergence(NumericalError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class PositivityViolation(NumericalError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class MaxIterationsExceeded(NumericalError):
    pass


# --- asymptotics ----------------------------------------------------------

class RangeExceeded(ParameterError):
    pass


class WindowTooShort(ParameterError):
    pass


class NonpositiveValues(ParameterError):
    pass


class PlanMismatch(ParameterError):
    pass


class HorizonTooShort(ParameterError):
    pass


class PreconditionViolation(FracVolterraError, ValueError):
    """A precondition of the sharpness experiment failed.

    ``inequality`` names the failed condition so callers can report it.
    """

    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality or message
