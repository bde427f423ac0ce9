"""Exception hierarchy shared across the package."""


class RobustFLError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(RobustFLError, ValueError):
    pass


class NonFiniteResult(RobustFLError, ArithmeticError):
    pass


class EmptyInput(RobustFLError, ValueError):
    pass


class InvalidParam(RobustFLError, ValueError):
    pass


class UnknownClientId(RobustFLError, KeyError):
    pass


class BadMagic(RobustFLError, ValueError):
    pass


class TruncatedFile(RobustFLError, ValueError):
    pass


class ConfigError(RobustFLError, ValueError):
    pass


class SimulationError(RobustFLError):
    """A round failed; carries the records completed before the failure."""

    def __init__(self, message, round_index, records):
        super().__init__(message)
        self.round_index = round_index
        self.records = records


class IoError(RobustFLError, OSError):
    pass
