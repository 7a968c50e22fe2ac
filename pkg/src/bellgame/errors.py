"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BellGameError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(BellGameError, ValueError):
    pass


class TapeExhausted(BellGameError, IndexError):
    pass


class EmptyMatch(BellGameError, ValueError):
    pass


class EmptyInput(BellGameError, ValueError):
    pass


class StrategyError(BellGameError, RuntimeError):
    """A strategy callback raised or returned an illegal value at trial ``n``."""

    def __init__(self, n: int, message: str):
        super().__init__(f"trial {n}: {message}")
        self.n = n


class UndefinedCorrelation(BellGameError, ZeroDivisionError):
    def __init__(self, a: int, b: int):
        super().__init__(f"no trials with settings (a, b) = ({a}, {b})")
        self.a = a
        self.b = b


class InconsistentInputs(BellGameError, ValueError):
    pass


class InvalidHiddenState(BellGameError, ValueError):
    pass


class SnapshotUnsupported(BellGameError, TypeError):
    pass


class InsufficientData(BellGameError, ValueError):
    pass


class ReplayMismatch(BellGameError, RuntimeError):
    """Replaying a recorded history did not reproduce the recorded outcomes."""
