"""Error hierarchy shared by the services and the command line.

Every error carries the process exit code the CLI maps it to: 2 for anything the
user can fix in the configuration, 3 for numerical aborts.
"""
from typing import Any, Dict, Optional


class LabError(Exception):
    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}


# Configuration errors (exit code 2)

class ConfigError(LabError):
    exit_code = 2


class UnknownSurfaceError(ConfigError):
    pass


class InvalidParameterError(ConfigError):
    pass


class DslSyntaxError(ConfigError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})", {"line": line, "column": column})
        self.line = line
        self.column = column


class UnboundVariableError(ConfigError):
    pass


class ArityError(ConfigError):
    pass


class DomainRangeError(ConfigError):
    pass


class SupportError(ConfigError):
    pass


class GridSpecError(ConfigError):
    pass


# Numerical errors (exit code 3)

class NumericalError(LabError):
    exit_code = 3


class JetOrderError(NumericalError, ValueError):
    pass


class JetDomainError(NumericalError, ValueError):
    def __init__(self, message: str, value: Optional[float] = None):
        super().__init__(message, {"value": value})
        self.value = value


class DegenerateMetricError(NumericalError):
    pass


class PunctureProximityError(NumericalError):
    pass


class InversionCollisionError(NumericalError):
    pass


class NonConformalChartError(NumericalError):
    pass


class GridTooCoarseError(NumericalError):
    pass


class OverflowGuardError(NumericalError):
    pass


class DegenerateFitError(NumericalError):
    pass


class NorthPoleError(NumericalError):
    pass
