"""Bottom, left-side, height and width sequences in the log domain.

Every sequence is an exponential in ``k`` within an epoch ``m``::

    log B(k, m) = b_m + eps2 k
    log L(k, m) = eps1 k + logaddexp(-eps1 gamma^m, t_m)
    log H(k, m) = h_m + eps2 k - log2 min(k, gamma^m - gamma^(m-1))
    log W(k, m) = w_m + eps1 k

so a table stores the per-epoch constants ``b_m, t_m, h_m, w_m`` and answers
queries in O(1).  The series behind ``b_m`` and ``t_m`` decay
double-exponentially and are truncated once a term falls ``TRUNCATION_NATS``
below the running log-sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, StepOverflow
from .logreal import LogReal, logsumexp
from .parameters import LOG2, Params

TRUNCATION_NATS = 30.0 * math.log(10.0)   # relative 1e-30
STEP_BITS = 62


def gamma_pow(gamma: int, m: int) -> int:
    if m < 0:
        raise IndexOutOfRange(f"epoch {m} < 0")
    return gamma**m


def checked_steps(n: int) -> int:
    """Guard for step counts that must fit a signed 64-bit integer."""
    if n < 0 or n.bit_length() > STEP_BITS:
        raise StepOverflow(f"step count {n} exceeds 2^{STEP_BITS}")
    return n


def _eps(p: Params, j: int) -> float:
    return p.eps1 if j % 2 else p.eps2


def zeta(j: int, m: int, p: Params) -> float:
    """eps1 gamma^m for odd j, eps2 gamma^m for even j."""
    if m < 0:
        raise IndexOutOfRange(f"epoch {m} < 0")
    g = gamma_pow(p.gamma, m)
    if g.bit_length() > 1000:
        raise StepOverflow(f"gamma^{m} too large")
    return _eps(p, j) * float(g)


def _alternating(p: Params, m: int, start: int, count: int) -> float:
    """sum_{j=0}^{count-1} eps(start+j) gamma^(m+j), summing integer weights first."""
    odd = even = 0
    for j in range(count):
        if (start + j) % 2:
            odd += p.gamma ** (m + j)
        else:
            even += p.gamma ** (m + j)
    return p.eps1 * odd + p.eps2 * even


def _series(p: Params, m: int, start: int, first_len: int, truncation: float) -> tuple[float, int, float]:
    """log sum_i exp(-sum_{j<first_len+2i} eps(start+j) gamma^(m+j)).

    Returns (log-sum, number of terms, log(sum / leading term)).
    """
    terms = []
    i = 0
    while True:
        t = -_alternating(p, m, start, first_len + 2 * i)
        if terms and t < terms[0] + math.log1p(math.fsum(math.exp(s - terms[0]) for s in terms[1:])) - truncation:
            break
        terms.append(t)
        i += 1
        if i > 64:
            break
    head = terms[0]
    rel = math.log1p(math.fsum(math.exp(s - head) for s in terms[1:]))
    return head + rel, len(terms), rel


@dataclass(frozen=True)
class EpochConstants:
    m: int
    G: int          # gamma^m
    b: float        # log B(0, m)
    t: float        # log of the tail series of L
    h: float        # log H(0, m)
    w: float        # log W(0, m)
    terms_b: int
    terms_t: int
    b_rel: float    # log(B(0,m) / leading series term)


def _epoch_constants(p: Params, m: int, truncation: float) -> EpochConstants:
    g = p.gamma
    G = g**m
    b, nb, b_rel = _series(p, m, 0, 2, truncation)
    t, nt, _ = _series(p, m, 1, 3, truncation)
    c = (1.0 - 1.0 / g) * LOG2
    # integer weights of eps1/eps2 and of c, then one multiplication each
    h_odd = sum(g**i for i in range(m) if (m - i) % 2)
    h_even = sum(g**i for i in range(m) if not (m - i) % 2)
    h_c = sum(g ** (m - 2 * i) for i in range(1, m // 2 + 1))
    w_odd = sum(g**i for i in range(m) if (m - 1 - i) % 2)
    w_even = sum(g**i for i in range(m) if not (m - 1 - i) % 2)
    w_c = sum(g ** (m - 1 - 2 * i) for i in range(0, (m - 1) // 2 + 1)) if m >= 1 else 0
    h = p.eps1 * h_odd + p.eps2 * h_even - c * h_c
    w = p.eps1 * w_odd + p.eps2 * w_even - c * w_c
    return EpochConstants(m=m, G=G, b=b, t=t, h=h, w=w, terms_b=nb, terms_t=nt, b_rel=b_rel)


class SequenceTable:
    """Per-epoch constants for epochs ``m_min..m_max`` with vectorized queries.

    Indices are admissible when ``m_min <= m <= m_max`` and
    ``0 <= k <= gamma^m - 1``.  The table is immutable; :meth:`corrupted`
    returns a perturbed copy for negative-control tests.
    """

    def __init__(self, params: Params, m_max: int = 12, m_min: int = 0,
                 truncation: float = TRUNCATION_NATS):
        if m_min < 0 or m_max < m_min:
            raise ValueError("need 0 <= m_min <= m_max")
        self.params = params
        self.m_min = m_min
        self.m_max = m_max
        self.truncation = truncation
        self._epochs = {m: _epoch_constants(params, m, truncation) for m in range(m_min, m_max + 1)}
        self._offsets: dict = {}

    def corrupted(self, name: str, m: int, offset: float, k: int | None = None) -> "SequenceTable":
        """Copy with ``offset`` added to log of sequence ``name`` at epoch ``m`` (and step ``k``)."""
        if name not in "BLHW" or len(name) != 1:
            raise ValueError(f"unknown sequence {name!r}")
        new = object.__new__(SequenceTable)
        new.__dict__.update(self.__dict__)
        new._offsets = dict(self._offsets)
        new._offsets[(name, m, k)] = new._offsets.get((name, m, k), 0.0) + offset
        return new

    # -- bookkeeping --------------------------------------------------
    def epoch(self, m: int) -> EpochConstants:
        try:
            return self._epochs[m]
        except KeyError:
            raise IndexOutOfRange(f"epoch {m} outside table range [{self.m_min}, {self.m_max}]") from None

    def G(self, m: int) -> int:
        return self.epoch(m).G

    def halving_length(self, m: int) -> int:
        """Number of halving steps gamma^m - gamma^(m-1) in epoch m."""
        if m < 1:
            raise IndexOutOfRange("halving phase needs m >= 1")
        G = self.G(m)
        return G - G // self.params.gamma

    def _k(self, k, m):
        e = self.epoch(m)
        arr = np.asarray(k)
        if arr.dtype.kind not in "iu":
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise IndexOutOfRange("k must be integral")
        if np.any(arr < 0) or np.any(arr > e.G - 1):
            raise IndexOutOfRange(f"k outside [0, {e.G - 1}] at m={m}")
        return e, arr

    def _apply(self, name, m, k, value):
        if not self._offsets:
            return value
        off = self._offsets.get((name, m, None), 0.0)
        value = value + off
        for (nm, mm, kk), o in self._offsets.items():
            if nm == name and mm == m and kk is not None:
                value = np.where(np.asarray(k) == kk, value + o, value)
        return value

    @staticmethod
    def _out(value):
        return float(value) if np.ndim(value) == 0 else value

    # -- raw log queries (vectorized in k) ----------------------------
    def log_B(self, k, m):
        e, k = self._k(k, m)
        return self._out(self._apply("B", m, k, e.b + self.params.eps2 * k))

    def log_L(self, k, m):
        e, k = self._k(k, m)
        base = np.logaddexp(-self.params.eps1 * float(e.G), e.t)
        return self._out(self._apply("L", m, k, base + self.params.eps1 * k))

    def log_L_excess(self, k, m):
        """log(L(k, m) - exp(-eps1 (gamma^m - k))), computed without cancellation."""
        e, k = self._k(k, m)
        return self._out(e.t + self.params.eps1 * k)

    def log_H(self, k, m):
        if m < 1:
            raise IndexOutOfRange("H needs m >= 1")
        e, k = self._k(k, m)
        halv = self.halving_length(m)
        val = e.h + self.params.eps2 * k - LOG2 * np.minimum(k, halv)
        return self._out(self._apply("H", m, k, val))

    def log_W(self, k, m):
        if m < 1:
            raise IndexOutOfRange("W needs m >= 1")
        e, k = self._k(k, m)
        return self._out(self._apply("W", m, k, e.w + self.params.eps1 * k))

    # -- LogReal front end --------------------------------------------
    def bottom_left(self, k: int, m: int) -> tuple[LogReal, LogReal]:
        return LogReal.exp(self.log_B(k, m)), LogReal.exp(self.log_L(k, m))

    def height_width(self, k: int, m: int) -> tuple[LogReal, LogReal]:
        return LogReal.exp(self.log_H(k, m)), LogReal.exp(self.log_W(k, m))

    def epoch_arrays(self, m: int) -> dict:
        """All four log sequences over k = 0..gamma^m-1."""
        k = np.arange(self.G(m), dtype=np.int64)
        return {"k": k, "logB": self.log_B(k, m), "logL": self.log_L(k, m),
                "logH": self.log_H(k, m), "logW": self.log_W(k, m)}


# -- collars --------------------------------------------------------------

def log_delta(k_minus_1, p: Params):
    """log Delta(j) = log((e^{-eps1 j} - e^{-eps1 (j+1)}) / 6), stable via expm1."""
    j = np.asarray(k_minus_1, dtype=float)
    val = -p.eps1 * (j + 1.0) + math.log(math.expm1(p.eps1) / 6.0)
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class Interval:
    lo: LogReal
    hi: LogReal

    def __contains__(self, x) -> bool:
        x = LogReal.coerce(x)
        return self.lo <= x <= self.hi

    @property
    def length(self) -> LogReal:
        return self.hi - self.lo

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def disjoint(self, other: "Interval") -> bool:
        return self.hi < other.lo or other.hi < self.lo


@dataclass(frozen=True)
class CollarIntervals:
    k: int
    delta: LogReal      # Delta(k-1)
    I: Interval
    J: Interval
    K: Interval


def collar(k: int, p: Params) -> CollarIntervals:
    if k < 1:
        raise IndexOutOfRange("collar index must be >= 1")
    left = LogReal.exp(-p.eps1 * k)
    d = LogReal.exp(log_delta(k - 1, p))
    d_next = LogReal.exp(log_delta(k, p))
    I = Interval(left, left + 6 * d)
    J = Interval(left, left + 2 * d)
    K = Interval(left - d_next, J.hi + d_next)
    return CollarIntervals(k=k, delta=d, I=I, J=J, K=K)


def collar_index(x: float, p: Params) -> int:
    """Candidate collar k with x near I_k, i.e. e^{-eps1 k} <= x < e^{-eps1 (k-1)}."""
    if x <= 0:
        raise ValueError("x must be positive")
    return max(1, math.ceil(-math.log(x) / p.eps1))


# -- inequality suite -------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    m: int
    slack: float        # min over k of (rhs - lhs) in log domain; > 0 passes
    k_worst: int
    evaluated: int
    strict: bool = True

    @property
    def ok(self) -> bool:
        return self.slack > 0 or (not self.strict and self.slack >= 0)


DENSE_LIMIT = 1 << 16


def _k_grid(G: int, gamma: int) -> np.ndarray:
    """k = 1..G, or the breakpoints of the piecewise-linear slacks when G is large."""
    if G <= DENSE_LIMIT:
        return np.arange(1, G + 1, dtype=np.int64)
    q = G // gamma
    pts = {1, 2, q - 1, q, q + 1, G - 1, G}
    return np.array(sorted(x for x in pts if 1 <= x <= G), dtype=object)


def _as_float(a):
    return np.asarray(a, dtype=float)


def slack_B_top(tab: SequenceTable, m: int, k):
    # -eps1 g^{m+1} - log B(G-1,m) = eps2 - log(B(0,m)/leading term); the
    # direct difference of two ~eps1 g^{m+1} sized logs loses this at large m
    G = tab.G(m)
    val = tab.params.eps2 - tab.epoch(m).b_rel
    off = (-tab.params.eps1 * float(tab.params.gamma * G) - tab.log_B(G - 1, m)) - (
        -tab.params.eps1 * float(tab.params.gamma * G) - (tab.epoch(m).b + tab.params.eps2 * (G - 1)))
    return np.full(np.shape(k), val + off)


def slack_B_halving(tab: SequenceTable, m: int, k):
    g = tab.params.gamma
    G = tab.G(m)
    return (tab.log_B(G - k, m) - LOG2) - tab.log_B(g * G - k, m + 1)


def slack_L_excess(tab: SequenceTable, m: int, k):
    G = tab.G(m)
    return log_delta(_as_float(k) - 1, tab.params) - tab.log_L_excess(G - k, m)


def slack_W_bound(tab: SequenceTable, m: int, k):
    G = tab.G(m)
    return -tab.params.eps1 * float(tab.params.gamma**2 * G) - tab.log_W(G - k, m)


def slack_W_bound_delta(tab: SequenceTable, m: int, k):
    G = tab.G(m)
    return log_delta(_as_float(k) - 1, tab.params) + tab.params.eps1 * float(tab.params.gamma**2 * G)


def slack_H_below_B(tab: SequenceTable, m: int, k):
    G = tab.G(m)
    return tab.log_B(G - k, m) - tab.log_H(G - k, m)


def slack_fits_collar(tab: SequenceTable, m: int, k):
    """Rectangle R(gamma^m-k, m) fits in the plateau J_k: excess + W < 2 Delta(k-1)."""
    G = tab.G(m)
    lhs = np.logaddexp(tab.log_L_excess(G - k, m), tab.log_W(G - k, m))
    return LOG2 + log_delta(_as_float(k) - 1, tab.params) - lhs


def slack_stacked(tab: SequenceTable, m: int, k):
    """Outside its home collar the rectangle lies below the earlier plateau.

    For k <= gamma^(m-1): B + H at (gamma^m - k, m) stays below
    B(gamma^(m-1) - k, m-1).  Entries with k > gamma^(m-1) are +inf.
    """
    G = tab.G(m)
    q = G // tab.params.gamma
    k = np.asarray(k)
    out = np.full(k.shape, np.inf)
    sel = k <= q
    if np.any(sel):
        ks = k[sel]
        top = np.logaddexp(tab.log_B(G - ks, m), tab.log_H(G - ks, m))
        out[sel] = tab.log_B(q - ks, m - 1) - top
    return out


# name -> (slack function, strict)
INEQUALITIES = {
    "B_top": (slack_B_top, True),
    "B_halving": (slack_B_halving, True),
    "L_excess": (slack_L_excess, True),
    "W_bound": (slack_W_bound, False),
    "W_bound_delta": (slack_W_bound_delta, True),
    "H_below_B": (slack_H_below_B, True),
    "fits_collar": (slack_fits_collar, True),
    "stacked": (slack_stacked, True),
}

STATED_CHECKS = ("B_top", "B_halving", "L_excess", "W_bound", "W_bound_delta", "H_below_B")
WANDERING_CHECKS = ("B_top", "B_halving", "L_excess", "fits_collar", "stacked")


def check_epoch(tab: SequenceTable, m: int, checks=STATED_CHECKS, k=None) -> list[CheckResult]:
    G = tab.G(m)
    ks = _k_grid(G, tab.params.gamma) if k is None else np.atleast_1d(np.asarray(k))
    out = []
    for name in checks:
        fn, strict = INEQUALITIES[name]
        s = _as_float(fn(tab, m, ks))
        i = int(np.argmin(s))
        out.append(CheckResult(name=name, m=m, slack=float(s[i]), k_worst=int(ks[i]),
                               evaluated=len(ks), strict=strict))
    return out


def inequality_suite(tab: SequenceTable, M: int, m_probe: int = 3, checks=STATED_CHECKS):
    return [c for m in range(M + 1, M + m_probe + 1) for c in check_epoch(tab, m, checks)]


# -- recurrence suite -------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceResult:
    name: str
    m: int
    max_error: float
    count: int
    tol: float = 1e-12

    @property
    def ok(self) -> bool:
        return self.max_error <= self.tol


def recurrence_suite(tab: SequenceTable, m_lo: int, m_hi: int, tol: float = 1e-12) -> list[RecurrenceResult]:
    """Check the eight recurrences and epoch-boundary identities for m in [m_lo, m_hi]."""
    p = tab.params
    e1, e2 = p.eps1, p.eps2
    res = []

    def add(name, m, diff):
        diff = np.atleast_1d(np.abs(np.asarray(diff, dtype=float)))
        res.append(RecurrenceResult(name, m, float(np.max(diff)) if diff.size else 0.0, diff.size, tol))

    for m in range(m_lo, m_hi + 1):
        G = tab.G(m)
        k = np.arange(G - 1, dtype=np.int64)
        add("B(k+1)=lam2 B(k)", m, tab.log_B(k + 1, m) - tab.log_B(k, m) - e2)
        add("L(k+1)=lam1 L(k)", m, tab.log_L(k + 1, m) - tab.log_L(k, m) - e1)
        # L(G-1,m) - e^{-eps1} is far below the resolution of L itself, so the
        # identity is checked on the excess, which is tied to L separately
        add("L=e^{-eps1(G-k)}+excess", m,
            tab.log_L(k, m) - np.logaddexp(-e1 * (G - k).astype(float), tab.log_L_excess(k, m)))
        add("B(0,m+1)=lam1(L(G-1,m)-e^-eps1)", m, tab.log_B(0, m + 1) - (e1 + tab.log_L_excess(G - 1, m)))
        add("L(0,m+1)=lam2 B(G-1,m)", m, tab.log_L(0, m + 1) - (e2 + tab.log_B(G - 1, m)))
        add("W(k+1)=lam1 W(k)", m, tab.log_W(k + 1, m) - tab.log_W(k, m) - e1)
        halv = tab.halving_length(m)
        kh = np.arange(halv, dtype=np.int64)
        kn = np.arange(halv, G - 1, dtype=np.int64)
        add("H(k+1)=lam2/2 H(k)", m, tab.log_H(kh + 1, m) - tab.log_H(kh, m) - (e2 - LOG2))
        add("H(k+1)=lam2 H(k)", m, tab.log_H(kn + 1, m) - tab.log_H(kn, m) - e2)
        add("W(0,m+1)=lam2 H(G-1,m)", m, tab.log_W(0, m + 1) - (e2 + tab.log_H(G - 1, m)))
        add("H(0,m+1)=lam1 W(G-1,m)", m, tab.log_H(0, m + 1) - (e1 + tab.log_W(G - 1, m)))
    return res


def tail_terms(tab: SequenceTable, m: int) -> tuple[int, int]:
    e = tab.epoch(m)
    return e.terms_b, e.terms_t


__all__ = [
    "SequenceTable", "zeta", "collar", "collar_index", "CollarIntervals", "Interval",
    "log_delta", "check_epoch", "inequality_suite", "recurrence_suite", "STATED_CHECKS",
    "WANDERING_CHECKS", "INEQUALITIES", "CheckResult", "RecurrenceResult", "TRUNCATION_NATS",
    "gamma_pow", "checked_steps", "logsumexp",
]
