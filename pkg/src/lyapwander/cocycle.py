"""Derivative cocycle along the wandering orbit.

Along the orbit of a wandering rectangle starting in epoch ``m0`` the
derivative is diag(lam1, lam2) on every step except the last of each block
(block j has gamma^(m0+j) steps), where the D1+ swap exchanges the two
tangent slots.  Each original tangent component therefore picks up eps1 per
step spent in the e1 slot and eps2 per step in the e2 slot; log-norms come
from those integer step counts, so no error accumulates along the trace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import StepOverflow, WindowTooShort
from .parameters import LimitExponents, Params, limit_exponents
from .sequences import checked_steps


def _log_abs(c: float) -> float:
    return math.log(abs(c)) if c != 0 else -math.inf


@dataclass(frozen=True)
class BlockItinerary:
    m0: int
    gamma: int

    def block_length(self, j: int) -> int:
        return self.gamma ** (self.m0 + j)

    def block_start(self, j: int) -> int:
        """Steps taken before block j starts."""
        g, b = self.gamma, self.gamma**self.m0
        return b * (g**j - 1) // (g - 1)

    def locate(self, n: int) -> tuple[int, int]:
        """(block j, steps done inside block j) after n steps; n at a block end maps to (j+1, 0)."""
        j = 0
        while self.block_start(j + 1) <= n:
            j += 1
        return j, n - self.block_start(j)

    def slot_counts(self, n: int) -> tuple[int, int]:
        """Steps component a spends in the e1 slot and in the e2 slot during the first n steps."""
        checked_steps(n)
        j, k = self.locate(n)
        even = sum(self.block_length(i) for i in range(0, j, 2))
        odd = sum(self.block_length(i) for i in range(1, j, 2))
        if j % 2 == 0:
            even += k
        else:
            odd += k
        return even, odd


def _combine(la: float, lb: float) -> float:
    """0.5 log(e^{2 la} + e^{2 lb})."""
    return 0.5 * float(np.logaddexp(2 * la, 2 * lb))


def cocycle_lognorm(m0: int, n: int, alpha: float, beta: float, p: Params) -> float:
    """log ||DF^n(x) v|| for v = alpha e1 + beta e2 at a point of R(0, m0)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if alpha == 0 and beta == 0:
        raise ValueError("tangent vector must be non-zero")
    even, odd = BlockItinerary(m0, p.gamma).slot_counts(n)
    la = _log_abs(alpha) + p.eps1 * even + p.eps2 * odd
    lb = _log_abs(beta) + p.eps2 * even + p.eps1 * odd
    return _combine(la, lb)


def cocycle_vector(m0: int, n: int, alpha: float, beta: float, p: Params) -> np.ndarray:
    """DF^n v by explicit multiplication of the per-step matrices (small n only)."""
    it = BlockItinerary(m0, p.gamma)
    v = np.array([alpha, beta], dtype=float)
    scale = np.array([[p.lam1, 0.0], [0.0, p.lam2]])
    swap = np.array([[0.0, p.lam2], [p.lam1, 0.0]])
    j, left = 0, it.block_length(0)
    for _ in range(n):
        left -= 1
        if left == 0:
            v = swap @ v
            j += 1
            left = it.block_length(j)
        else:
            v = scale @ v
    return v


# -- closed forms ----------------------------------------------------------

def _S(gamma: int, n: int) -> int:
    return sum(gamma ** (2 * j) for j in range(n))


def u_mn(m: int, n: int, gamma: int) -> int:
    """Crossover step gamma^m (gamma-1) sum_{j<n} gamma^{2j}."""
    return gamma**m * (gamma - 1) * _S(gamma, n)


def block_aligned_time(m: int, n: int, k: int, gamma: int) -> int:
    """gamma^m sum_{i<2n} gamma^i + k."""
    return gamma**m * (gamma ** (2 * n) - 1) // (gamma - 1) + k


def log_c_coeff(n, k, alpha, beta, m, gamma, lam1, lam2):
    ratio = math.log(lam2) - math.log(lam1)          # log(lam2/lam1) < 0
    u = u_mn(m, n, gamma)
    la2, lb2 = 2 * _log_abs(alpha), 2 * _log_abs(beta)
    k = np.asarray(k, dtype=float)
    below = np.logaddexp(la2 + 2 * ratio * (u - k), lb2)
    above = np.logaddexp(la2, lb2 + 2 * ratio * (k - u))
    out = np.where(k <= u, below, above)
    return float(out) if out.ndim == 0 else out


def c_coeff(n, k, alpha, beta, m, gamma, lam1, lam2):
    """Two-branch coefficient c_{n,k}; both branches give alpha^2 + beta^2 at k = u."""
    return np.exp(log_c_coeff(n, k, alpha, beta, m, gamma, lam1, lam2))


def closed_form_lognorm(m: int, n: int, k, alpha: float, beta: float, p: Params):
    """Closed-form log-norm after gamma^m sum_{i<2n} gamma^i + k steps, 0 <= k <= gamma^{m+2n}."""
    g = p.gamma
    S = _S(g, n)
    u = u_mn(m, n, g)
    k = np.asarray(k, dtype=float)
    if np.any(k < 0) or np.any(k > g ** (m + 2 * n)):
        raise ValueError("k outside [0, gamma^(m+2n)]")
    lc = 0.5 * np.asarray(log_c_coeff(n, k, alpha, beta, m, g, p.lam1, p.lam2))
    lo_branch = g ** (m + 1) * S * p.eps1 + (g**m * S + k) * p.eps2
    hi_branch = (g**m * S + k) * p.eps1 + g ** (m + 1) * S * p.eps2
    out = np.where(k <= u, lo_branch, hi_branch) + lc
    return float(out) if out.ndim == 0 else out


def phi(n: int, t, m: int, p: Params, branch: int | None = None):
    """Rational profile of the log-norm per step; ``branch`` forces one piece on the whole domain."""
    g = p.gamma
    S = _S(g, n)
    u = u_mn(m, n, g)
    t = np.asarray(t, dtype=float)
    den = g**m * S * (1 + g) + t
    phi1 = (g ** (m + 1) * S * p.eps1 + (g**m * S + t) * p.eps2) / den
    phi2 = ((g**m * S + t) * p.eps1 + g ** (m + 1) * S * p.eps2) / den
    if branch == 1:
        out = phi1
    elif branch == 2:
        out = phi2
    else:
        out = np.where(t <= u, phi1, phi2)
    return float(out) if out.ndim == 0 else out


def phi_derivative(n: int, t, m: int, p: Params):
    g = p.gamma
    S = _S(g, n)
    u = u_mn(m, n, g)
    t = np.asarray(t, dtype=float)
    den = g**m * S * (1 + g) + t
    phi1 = (g ** (m + 1) * S * p.eps1 + (g**m * S + t) * p.eps2) / den
    phi2 = ((g**m * S + t) * p.eps1 + g ** (m + 1) * S * p.eps2) / den
    return np.where(t <= u, (p.eps2 - phi1) / den, (p.eps1 - phi2) / den)


# -- traces -----------------------------------------------------------------

@dataclass
class ExponentTrace:
    m0: int
    alpha: float
    beta: float
    params: Params
    a: np.ndarray               # a[i] = a_{i+1}
    block: np.ndarray           # block index containing step n
    phase: np.ndarray           # steps completed inside that block, 1..length
    tag: np.ndarray             # 1 / 2 for the A1 / A2 time ranges, 0 before both

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.a.size + 1)

    @property
    def epoch(self) -> np.ndarray:
        return self.m0 + self.block

    def __len__(self):
        return self.a.size


def exponent_trace(m0: int, N_max: int, alpha: float, beta: float, p: Params) -> ExponentTrace:
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    checked_steps(N_max)
    if N_max > 1 << 31:
        raise StepOverflow("trace length exceeds the in-memory ceiling 2^31")
    if alpha == 0 and beta == 0:
        raise ValueError("tangent vector must be non-zero")
    g = p.gamma
    logn = kernels.trace_lognorm(m0, g, N_max, p.eps1, p.eps2, _log_abs(alpha), _log_abs(beta))
    n = np.arange(1, N_max + 1, dtype=np.int64)
    it = BlockItinerary(m0, g)
    starts = [0]
    while starts[-1] < N_max:
        starts.append(it.block_start(len(starts)))
    starts = np.array(starts, dtype=np.int64)
    block = np.searchsorted(starts, n, side="left") - 1       # start < n <= next start
    phase = n - starts[block]
    tag = np.zeros(N_max, dtype=np.int8)
    e = 0
    while g ** (m0 + e) <= N_max:
        lo, hi = g ** (m0 + e), g ** (m0 + e + 1)
        sel = (n >= lo) & (n <= hi) & (tag == 0)
        tag[sel] = 1 if e % 2 else 2
        e += 1
    return ExponentTrace(m0=m0, alpha=alpha, beta=beta, params=p, a=logn / n,
                         block=block.astype(np.int64), phase=phase, tag=tag)


@dataclass
class OmegaEstimate:
    lo: float
    hi: float
    predicted_lo: float
    predicted_hi: float
    n_last: int
    window: tuple[int, int]
    blocks: list = field(default_factory=list)      # (block, n_start, n_end, min, max)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def distance(self) -> float:
        return max(abs(self.lo - self.predicted_lo), abs(self.hi - self.predicted_hi))

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "predicted_lo": self.predicted_lo,
                "predicted_hi": self.predicted_hi, "n_last": self.n_last,
                "window": list(self.window), "distance": self.distance,
                "blocks": [dict(zip(("block", "n_start", "n_end", "min", "max"), b)) for b in self.blocks]}


def predicted_interval(alpha: float, beta: float, lim: LimitExponents) -> tuple[float, float]:
    return lim.interval_A1 if alpha != 0 and beta != 0 else lim.interval_A2


def omega_interval_estimate(trace: ExponentTrace, tail_fraction: float = 0.9) -> OmegaEstimate:
    """Tail min/max of a_n over complete blocks starting after (1 - tail_fraction) n_last.

    ``n_last`` is the end of the last complete block in the trace.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    g, m0 = trace.params.gamma, trace.m0
    N = len(trace)
    if N < 10 * g**m0:
        raise WindowTooShort(f"trace length {N} < 10 gamma^m0 = {10 * g**m0}")
    it = BlockItinerary(m0, g)
    j_end = 0
    while it.block_start(j_end + 1) <= N:
        j_end += 1
    n_last = it.block_start(j_end)
    cut = (1.0 - tail_fraction) * n_last
    blocks = [j for j in range(j_end) if it.block_start(j) >= cut]
    if len(blocks) < 2:
        raise WindowTooShort("tail window holds fewer than two complete blocks")
    per_block = []
    for j in range(j_end):
        s, e = it.block_start(j), it.block_start(j + 1)
        seg = trace.a[s:e]
        per_block.append((j, s + 1, e, float(seg.min()), float(seg.max())))
    lo_n = it.block_start(blocks[0]) + 1
    window = trace.a[lo_n - 1:n_last]
    lim = limit_exponents(trace.params)
    plo, phi_ = predicted_interval(trace.alpha, trace.beta, lim)
    return OmegaEstimate(lo=float(window.min()), hi=float(window.max()), predicted_lo=plo,
                         predicted_hi=phi_, n_last=n_last, window=(lo_n, n_last), blocks=per_block)


def blocks_total(m0: int, nblocks: int, gamma: int) -> int:
    """Steps in the first nblocks complete blocks."""
    return BlockItinerary(m0, gamma).block_start(nblocks)
