"""Exception hierarchy.

Validation problems (bad names, parameters, configs) derive from
``ParameterError`` and map to CLI exit code 2; numerical failures map to 3.
"""


class WillmoreLabError(Exception):
    pass


class ParameterError(WillmoreLabError, ValueError):
    pass


class DimensionError(ParameterError):
    pass


class ConfigError(ParameterError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ChartDomainError(WillmoreLabError, ValueError):
    pass


class RegularityError(WillmoreLabError, ArithmeticError):
    pass


class OptimizationError(WillmoreLabError, RuntimeError):
    pass
