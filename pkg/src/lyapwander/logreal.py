"""Sign/log-magnitude scalars.

A :class:`LogReal` stores ``sign * exp(logmag)`` so that quantities such as
``exp(-eps1 * gamma**(m + 1))`` survive far below the double-precision
underflow threshold.  Products are additions of log-magnitudes, sums go
through log-sum-exp, and comparisons never leave the log domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

_NEG_INF = float("-inf")


def logsumexp(values: Iterable[float]) -> float:
    """log(sum(exp(v))) for log-magnitudes of positive terms."""
    vals = [v for v in values if v != _NEG_INF]
    if not vals:
        return _NEG_INF
    top = max(vals)
    if top == float("inf"):
        return top
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))


def log_diff(big: float, small: float) -> float:
    """log(exp(big) - exp(small)) for big >= small."""
    if small == _NEG_INF:
        return big
    d = small - big
    if d > 0:
        raise ValueError("log_diff needs big >= small")
    if d == 0:
        return _NEG_INF
    # log1p(-e^d) loses accuracy as d -> 0; log(-expm1(d)) does not
    if d > -0.6931471805599453:
        return big + math.log(-math.expm1(d))
    return big + math.log1p(-math.exp(d))


@dataclass(frozen=True, slots=True)
class LogReal:
    sign: int
    logmag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign == 0 and self.logmag != _NEG_INF:
            object.__setattr__(self, "logmag", _NEG_INF)
        if self.sign != 0 and self.logmag == _NEG_INF:
            object.__setattr__(self, "sign", 0)
        if math.isnan(self.logmag):
            raise ValueError("logmag is NaN")

    # construction -------------------------------------------------------
    @classmethod
    def exp(cls, logmag: float, sign: int = 1) -> "LogReal":
        """The value ``sign * exp(logmag)``."""
        return cls(sign, float(logmag))

    @classmethod
    def from_float(cls, value: float) -> "LogReal":
        value = float(value)
        if value == 0.0:
            return ZERO
        if not math.isfinite(value):
            raise ValueError(f"cannot represent {value}")
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @classmethod
    def coerce(cls, value) -> "LogReal":
        if isinstance(value, LogReal):
            return value
        return cls.from_float(value)

    # conversions --------------------------------------------------------
    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.logmag)

    def log(self) -> float:
        """Natural log; only defined for positive values."""
        if self.sign != 1:
            raise ValueError("log of a non-positive LogReal")
        return self.logmag

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    # arithmetic ---------------------------------------------------------
    def __neg__(self) -> "LogReal":
        return LogReal(-self.sign, self.logmag)

    def __abs__(self) -> "LogReal":
        return LogReal(abs(self.sign), self.logmag)

    def __mul__(self, other) -> "LogReal":
        other = LogReal.coerce(other)
        s = self.sign * other.sign
        if s == 0:
            return ZERO
        return LogReal(s, self.logmag + other.logmag)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogReal":
        other = LogReal.coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        s = self.sign * other.sign
        if s == 0:
            return ZERO
        return LogReal(s, self.logmag - other.logmag)

    def __rtruediv__(self, other) -> "LogReal":
        return LogReal.coerce(other) / self

    def __add__(self, other) -> "LogReal":
        other = LogReal.coerce(other)
        if other.sign == 0:
            return self
        if self.sign == 0:
            return other
        if self.sign == other.sign:
            hi, lo = max(self.logmag, other.logmag), min(self.logmag, other.logmag)
            return LogReal(self.sign, hi + math.log1p(math.exp(lo - hi)))
        if self.logmag == other.logmag:
            return ZERO
        big, small = (self, other) if self.logmag > other.logmag else (other, self)
        return LogReal(big.sign, log_diff(big.logmag, small.logmag))

    __radd__ = __add__

    def __sub__(self, other) -> "LogReal":
        return self + (-LogReal.coerce(other))

    def __rsub__(self, other) -> "LogReal":
        return LogReal.coerce(other) + (-self)

    def scale_log(self, log_factor: float) -> "LogReal":
        """Multiply by ``exp(log_factor)``."""
        if self.sign == 0:
            return self
        return LogReal(self.sign, self.logmag + log_factor)

    # comparisons --------------------------------------------------------
    def _key(self):
        if self.sign > 0:
            return (1, self.logmag)
        if self.sign < 0:
            return (-1, -self.logmag)
        return (0, 0.0)

    def __lt__(self, other):
        return self._key() < LogReal.coerce(other)._key()

    def __le__(self, other):
        return self._key() <= LogReal.coerce(other)._key()

    def __gt__(self, other):
        return self._key() > LogReal.coerce(other)._key()

    def __ge__(self, other):
        return self._key() >= LogReal.coerce(other)._key()

    def __eq__(self, other):
        if not isinstance(other, (LogReal, int, float)):
            return NotImplemented
        return self._key() == LogReal.coerce(other)._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        if self.sign == 0:
            return "LogReal(0)"
        return f"LogReal({'-' if self.sign < 0 else '+'}exp({self.logmag!r}))"


ZERO = LogReal(0, _NEG_INF)
ONE = LogReal(1, 0.0)


def log_add_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise log(exp(a) + exp(b))."""
    return np.logaddexp(a, b)


def log_sub_arrays(big: np.ndarray, small: np.ndarray) -> np.ndarray:
    """Elementwise log(exp(big) - exp(small)); NaN where small > big."""
    big = np.asarray(big, dtype=float)
    small = np.asarray(small, dtype=float)
    d = small - big
    with np.errstate(invalid="ignore", divide="ignore"):
        near = d > -np.log(2.0)
        out = np.where(near, np.log(-np.expm1(d)), np.log1p(-np.exp(np.minimum(d, 0.0))))
    out = big + out
    return np.where(d > 0, np.nan, out)
