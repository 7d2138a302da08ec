"""Exception types shared across the simulator."""


class SimulationError(Exception):
    pass


class NonConvergence(SimulationError):
    """An iterative solve stopped above its residual tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DomainViolation(SimulationError, ValueError):
    """A constitutive law was evaluated outside its domain (e.g. v <= 0 for χ₀/v)."""


class NumericalFailure(SimulationError):
    """A run cannot continue: step rejected at the minimum step size, NaN, ..."""


class ParseError(SimulationError, ValueError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line


class ValidationError(SimulationError, ValueError):
    pass


class UnknownPreset(SimulationError, KeyError):
    def __str__(self):  # KeyError would repr() the message
        return str(self.args[0]) if self.args else ""
