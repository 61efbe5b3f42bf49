"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MismatchSmcError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(MismatchSmcError, ValueError):
    """Invalid configuration value.

    ``path`` is a dotted field path (``"nfs.alpha2"``, ``"disturbance.segments[1].start"``)
    so that command-line diagnostics can point at the offending entry.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class SingularInputGainError(MismatchSmcError, ZeroDivisionError):
    """The plant input gain b(x) vanished, so no control law can be evaluated."""


class DivergenceError(MismatchSmcError, ArithmeticError):
    """A state, estimate or learned parameter became non-finite.

    ``source`` names the offending stage: ``"plant"``, ``"observer"``, ``"learning"``
    or ``"controller"``.
    """

    def __init__(self, source: str, message: str):
        self.source = source
        super().__init__(f"{source} diverged: {message}")
