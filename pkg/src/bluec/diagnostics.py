"""Source locations, compile errors and warnings."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Location:
    file: str = "<input>"
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


NOWHERE = Location("<builtin>", 0, 0)


class BluecError(Exception):
    """Base class for every diagnostic that aborts compilation."""

    kind = "error"

    def __init__(self, message: str, loc: Location | None = None):
        super().__init__(message)
        self.message = message
        self.loc = loc or NOWHERE

    def format(self) -> str:
        if self.loc == NOWHERE:
            return f"error: {self.message}"
        return f"{self.loc}: error: {self.message}"

    def __str__(self) -> str:
        return self.format()


class LexError(BluecError):
    pass


class ParseError(BluecError):
    def __init__(self, message: str, loc: Location | None = None, expected: tuple[str, ...] = ()):
        if expected:
            message = f"{message} (expected one of: {', '.join(expected)})"
        super().__init__(message, loc)
        self.expected = expected


class ElaborationError(BluecError):
    pass


class NotStaticError(ElaborationError):
    def __init__(self, name: str, loc: Location | None = None):
        super().__init__(f"'{name}' is not an elaboration-time value", loc)
        self.name = name


class SchedulingError(BluecError):
    pass


class NetlistError(BluecError):
    pass


class SimulationError(BluecError):
    """Runtime invariant violation; indicates a scheduler defect."""


@dataclass(frozen=True)
class CompileWarning:
    message: str
    loc: Location = NOWHERE
    severity: str = "high"
    rule: str | None = None

    def format(self) -> str:
        return f"{self.loc}: warning: [{self.severity}] {self.message}"
