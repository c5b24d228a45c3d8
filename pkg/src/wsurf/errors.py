"""Exception hierarchy.

Validation errors (bad input) map to CLI exit code 1, numerical failures to
exit code 2.
"""


class WsurfError(Exception):
    exit_code = 1


class ValidationError(WsurfError, ValueError):
    exit_code = 1


class NumericalError(WsurfError, ArithmeticError):
    exit_code = 2


class InvalidParams(ValidationError):
    pass


class NonAdmissiblePoint(ValidationError):
    """``H**2 < 4K``: no real principal curvatures."""


class MissingSupportNormal(ValidationError):
    pass


class ClosedSurface(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NonManifold(ValidationError):
    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class JetSingular(NumericalError):
    pass


class DegenerateMetric(NumericalError):
    pass


class DegenerateTriangle(NumericalError):
    def __init__(self, message, face=None):
        super().__init__(message)
        self.face = face


class FloorHit(NumericalError):
    pass


class StepFloor(NumericalError):
    pass
