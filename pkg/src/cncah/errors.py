"""Exception types shared across the package."""


class CncahError(Exception):
    """Base class for all package errors."""


class FormatError(CncahError, ValueError):
    """Malformed graph file, shape script or config."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DisconnectedGraph(CncahError):
    pass


class DegenerateGraph(CncahError):
    pass


class DegenerateGeometry(CncahError):
    """Collinear overlapping segments or coincident nodes in a drawing."""


class NonPositive(CncahError, ValueError):
    pass


class InvalidParams(CncahError, ValueError):
    pass


class InfeasibleParams(CncahError):
    """Generator constraints could not be met within the attempt budget."""


class UnknownNode(CncahError, KeyError):
    pass


class ConfigError(CncahError, ValueError):
    pass
