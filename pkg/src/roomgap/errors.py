"""Exception hierarchy. Every error carries a stable ``code`` string."""

from __future__ import annotations


class RoomgapError(Exception):
    code = "ERROR"

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details


class PeriodNotReciprocalInteger(RoomgapError, ValueError):
    code = "PERIOD_NOT_RECIPROCAL_INTEGER"


class GeometryViolation(RoomgapError, ValueError):
    code = "GEOMETRY_VIOLATION"


class ResolutionTooCoarse(RoomgapError, ValueError):
    code = "RESOLUTION_TOO_COARSE"


class MeshError(RoomgapError):
    code = "MESH_INVALID"


class ZeroVector(RoomgapError, ValueError):
    code = "ZERO_VECTOR"


class PairingMismatch(RoomgapError, ValueError):
    code = "PAIRING_MISMATCH"


class NoConvergence(RoomgapError, ArithmeticError):
    code = "NO_CONVERGENCE"


class DimensionExceeded(RoomgapError, ValueError):
    code = "DIMENSION_EXCEEDED"


class CapExceeded(RoomgapError, ValueError):
    code = "CAP_EXCEEDED"


class BracketFailure(RoomgapError, ArithmeticError):
    code = "BRACKET_FAILURE"


class WindowNotCovered(RoomgapError):
    code = "WINDOW_NOT_COVERED"


class ConfigParseError(RoomgapError, ValueError):
    code = "PARSE_ERROR"


class ConfigValidationError(RoomgapError, ValueError):
    code = "VALIDATION_ERROR"
