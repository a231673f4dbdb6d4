"""Exception types shared across the package."""


class DrlTradeError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(DrlTradeError, ValueError):
    """An array reached a layer with the wrong shape."""

    def __init__(self, layer: str, expected, got):
        self.layer = layer
        self.expected = expected
        self.got = got
        super().__init__(f"{layer}: expected {expected}, got {got}")


class StateError(DrlTradeError, RuntimeError):
    """An operation was called in the wrong lifecycle state."""


class DataError(DrlTradeError, ValueError):
    """Market data is malformed or too short for the requested operation."""


class ConfigError(DrlTradeError, ValueError):
    """A configuration value is missing or out of range."""


class ScheduleError(DrlTradeError, ValueError):
    """The walk-forward schedule cannot be built from the available data."""


class SelectionError(DrlTradeError, ValueError):
    """No generation is eligible for selection."""


class NotReadyError(DrlTradeError):
    """Not enough experience collected yet; the caller should keep collecting."""


class UndefinedMetricError(DrlTradeError, ArithmeticError):
    """A metric is mathematically undefined for the given input (e.g. zero variance)."""
