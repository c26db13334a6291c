from __future__ import annotations

from typing import Any, Dict, Optional


class CasimirError(Exception):
    pass


class UnphysicalInputError(CasimirError, ValueError):
    pass


class OutOfRangeError(CasimirError, ValueError):
    pass


class DomainError(CasimirError, ValueError):
    pass


class InvariantViolation(CasimirError, RuntimeError):
    pass


class NonConvergenceError(CasimirError, ArithmeticError):
    """
    best    -- best available estimate (may be None)
    error   -- achieved error estimate
    channel -- where it happened, e.g. {"m": 3, "p": 0.7} or {"lambda": "TE", "l": 12}
    """

    def __init__(
        self,
        message: str,
        *,
        best: Optional[float] = None,
        error: Optional[float] = None,
        channel: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.best = best
        self.error = error
        self.channel = dict(channel or {})

    def with_channel(self, **channel: Any) -> "NonConvergenceError":
        # внешний канал дописываем к внутреннему, не затирая его
        merged = dict(channel)
        merged.update(self.channel)
        self.channel = merged
        return self

    def __str__(self) -> str:
        msg = super().__str__()
        if self.channel:
            where = ", ".join(f"{k}={v}" for k, v in self.channel.items())
            msg = f"{msg} [{where}]"
        return msg


class ResonanceError(NonConvergenceError):
    pass


class BesselRangeError(CasimirError, OverflowError):

    def __init__(self, l: int, x: float, what: str = "value"):
        super().__init__(f"scaled Bessel {what} out of range at l={l}, x={x!r}")
        self.l = l
        self.x = x


class ConfigError(CasimirError, ValueError):

    def __init__(self, message: str, *, path: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.path = path
        self.line = line

    def __str__(self) -> str:
        msg = super().__str__()
        if self.path and self.line:
            return f"{self.path}:{self.line}: {msg}"
        if self.path:
            return f"{self.path}: {msg}"
        return msg
