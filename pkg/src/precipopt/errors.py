"""Exception hierarchy shared by all modules."""


class PrecipError(Exception):
    """Base class for every error raised by the package."""


class InvalidGrid(PrecipError, ValueError):
    pass


class InfeasibleSet(PrecipError, ValueError):
    pass


class InvalidSize(PrecipError, ValueError):
    pass


class DimensionMismatch(PrecipError, ValueError):
    pass


class NumericalBlowup(PrecipError, ArithmeticError):
    """A non-finite value appeared while marching the state recurrence."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"non-finite state at index {index}")


class DegenerateCharacteristic(PrecipError, ArithmeticError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"nonpositive characteristic base at step {index}")


class EmptyPopulation(PrecipError):
    """No particles at the final time, so mean and variance are undefined."""


class BadInitialControl(PrecipError):
    pass


class ModelInconsistency(PrecipError):
    """Cutting-plane model predicts an increase at the trial point."""


class ConfigError(PrecipError, ValueError):
    def __init__(self, message, section=None, line=None):
        self.section = section
        self.line = line
        where = []
        if section is not None:
            where.append(f"section [{section}]")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
