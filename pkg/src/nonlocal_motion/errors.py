"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class NonlocalMotionError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(NonlocalMotionError, ValueError):
    """An argument does not satisfy the documented pre-condition."""


class SingularConfigurationError(NonlocalMotionError, ValueError):
    """A model was evaluated where its potential is singular."""


class NonFiniteError(NonlocalMotionError, ArithmeticError):
    """A quantity overflowed or became NaN.

    ``t`` holds the time at which the offending value was produced.
    """

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t={t!r})")
        self.t = t


class PreconditionError(NonlocalMotionError, ValueError):
    """A hypothesis required by an analysis does not hold."""


class RegimeError(NonlocalMotionError, ValueError):
    """Model parameters do not match the requested analysis regime."""


class LawViolation(NonlocalMotionError, ArithmeticError):
    """A closed-form law produced an impossible value on a trajectory."""


class ConfigError(NonlocalMotionError, ValueError):
    """Malformed scenario configuration, with 1-based line/column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.column = column
