"""Wandering rectangles R(k, m), their propagation, and orbit statistics.

R(k, m) = (L, L + W) x (B, B + H) with the table values at (k, m).  One
step of F sends R(k, m) onto R(k+1, m) (two-to-one in the halving phase) and
R(gamma^m - 1, m) onto R(0, m+1).  Points are tracked in rectangle-relative
coordinates (u, v) stored as 64-bit fixed point, which never underflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BoundaryHit, CoverageFailure, DisjointnessFailure, IndexOutOfRange
from .logreal import LogReal, log_sub_arrays
from .parameters import LOG2, Params
from .sequences import SequenceTable, log_delta

TWO64 = 1 << 64
HALF64 = 1 << 63
MASK64 = TWO64 - 1
COVER_TOL = 1e-12


@dataclass(frozen=True)
class Rect:
    k: int
    m: int
    L: LogReal
    B: LogReal
    W: LogReal
    H: LogReal

    @property
    def x_interval(self) -> tuple[float, float]:
        """(log L, log(L + W))"""
        return self.L.logmag, float(np.logaddexp(self.L.logmag, self.W.logmag))

    @property
    def y_interval(self) -> tuple[float, float]:
        return self.B.logmag, float(np.logaddexp(self.B.logmag, self.H.logmag))

    def inside_domain(self) -> bool:
        return self.x_interval[1] < 0.0 and self.y_interval[1] < 0.0

    def embed(self, u: float, v: float) -> tuple[LogReal, LogReal]:
        """Absolute point (L + uW, B + vH)."""
        return self.L + self.W * u, self.B + self.H * v


def _check_index(k: int, m: int, tab: SequenceTable) -> None:
    M = tab.params.M
    if M is not None and m <= M:
        raise IndexOutOfRange(f"epoch {m} must exceed the base epoch M={M}")
    if not 0 <= k <= tab.G(m) - 1:
        raise IndexOutOfRange(f"k={k} outside [0, {tab.G(m) - 1}] at m={m}")


def rectangle(k: int, m: int, tab: SequenceTable) -> Rect:
    _check_index(k, m, tab)
    return Rect(k=k, m=m, L=LogReal.exp(tab.log_L(k, m)), B=LogReal.exp(tab.log_B(k, m)),
                W=LogReal.exp(tab.log_W(k, m)), H=LogReal.exp(tab.log_H(k, m)))


def next_index(k: int, m: int, tab: SequenceTable) -> tuple[int, int]:
    return (k + 1, m) if k < tab.G(m) - 1 else (0, m + 1)


def phase(k: int, m: int, tab: SequenceTable) -> str:
    """'halving', 'scaling' or 'swap' for the step leaving R(k, m)."""
    G = tab.G(m)
    if k == G - 1:
        return "swap"
    return "halving" if k < tab.halving_length(m) else "scaling"


def _covers(name: str, image: tuple[float, float], target: tuple[float, float], tol=COVER_TOL):
    lo_i, hi_i = image
    lo_t, hi_t = target
    if lo_i > lo_t + tol * max(1.0, abs(lo_t)) or hi_i < hi_t - tol * max(1.0, abs(hi_t)):
        raise CoverageFailure(f"{name}: image [{lo_i:.15g}, {hi_i:.15g}] does not cover "
                              f"target [{lo_t:.15g}, {hi_t:.15g}] (log domain)")


def _require(cond: bool, what: str) -> None:
    if not cond:
        raise CoverageFailure(what)


def advance_rectangle(k: int, m: int, tab: SequenceTable) -> tuple[int, int]:
    """Next index, after verifying that F(R(k, m)) covers R(k', m')."""
    p = tab.params
    _check_index(k, m, tab)
    R = rectangle(k, m, tab)
    k2, m2 = next_index(k, m, tab)
    T = rectangle(k2, m2, tab) if m2 <= tab.m_max else None
    if T is None:
        raise IndexOutOfRange(f"epoch {m2} beyond table")
    e1, e2 = p.eps1, p.eps2
    G = tab.G(m)
    step = phase(k, m, tab)
    _require(R.inside_domain(), f"R({k},{m}) not inside D")
    if step == "swap":
        # D1+: x > e^{-eps1}, 0 < y < e^{-eps2}; image (lam2 y, lam1 (x - e^{-eps1}))
        _require(R.y_interval[1] < -e2, f"R({k},{m}) exceeds y < e^-eps2")
        ex = tab.log_L_excess(k, m)
        ex_hi = float(np.logaddexp(ex, R.W.logmag))
        _covers("swap x", (R.y_interval[0] + e2, R.y_interval[1] + e2), T.x_interval)
        _covers("swap y", (ex + e1, ex_hi + e1), T.y_interval)
        return k2, m2
    c = G - k                                           # collar hosting R(k, m)
    _require(R.x_interval[1] < -e1, f"R({k},{m}) exceeds x < e^-eps1")
    excess = tab.log_L_excess(k, m)
    _require(float(np.logaddexp(excess, R.W.logmag)) < LOG2 + log_delta(c - 1, p),
             f"R({k},{m}) leaves the plateau J_{c}")
    _covers("x scaling", (R.x_interval[0] + e1, R.x_interval[1] + e1), T.x_interval)
    if step == "halving":
        # home collar plateau: f = B + H/2, eta = H/2
        lh = R.H.logmag - LOG2
        mid = float(np.logaddexp(R.B.logmag, lh))
        _covers("lower half", (R.B.logmag + e2, mid + e2), T.y_interval)
        upper_lo = R.B.logmag                           # (B + H/2) - H/2
        upper_hi = mid
        _covers("upper half", (upper_lo + e2, upper_hi + e2), T.y_interval)
        return k2, m2
    # scaling phase: the active plateau of collar c (if any) lies above the rectangle
    Mb = p.M if p.M is not None else 0
    if c > p.gamma**Mb:
        mc = m - 1
        while p.gamma ** (mc - 1) >= c:
            mc -= 1
        f_log = float(np.logaddexp(tab.log_B(tab.G(mc) - c, mc), tab.log_H(tab.G(mc) - c, mc) - LOG2))
        _require(R.y_interval[1] < f_log, f"R({k},{m}) meets the plateau of collar {c}")
    _covers("y scaling", (R.y_interval[0] + e2, R.y_interval[1] + e2), T.y_interval)
    return k2, m2


# -- relative coordinates ---------------------------------------------------

def splitmix64(state: int) -> tuple[int, int]:
    """(new state, output) of the splitmix64 generator."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


@dataclass(frozen=True)
class RelState:
    """Point of R(k, m) at offsets u = U / 2^64, v = V / 2^64.

    Doubling v discards its top bit; the vacated low bit is refilled from a
    seeded splitmix64 stream, which models a point with infinitely many
    binary digits.  ``swapped`` counts slot swaps modulo 2.
    """

    m: int
    k: int
    U: int
    V: int
    rng: int = 0
    swapped: int = 0

    @classmethod
    def from_floats(cls, m, k, u, v, seed=0) -> "RelState":
        if not (0.0 <= u < 1.0 and 0.0 <= v < 1.0):
            raise ValueError("u, v must lie in [0, 1)")
        return cls(m, k, int(u * TWO64) & MASK64, int(v * TWO64) & MASK64, seed & MASK64)

    @property
    def u(self) -> float:
        return self.U / TWO64

    @property
    def v(self) -> float:
        return self.V / TWO64


def relative_step(s: RelState, tab: SequenceTable) -> RelState:
    ph = phase(s.k, s.m, tab)
    k2, m2 = next_index(s.k, s.m, tab)
    if ph == "swap":
        return replace(s, m=m2, k=k2, U=s.V, V=s.U, swapped=s.swapped ^ 1)
    if ph == "scaling":
        return replace(s, m=m2, k=k2)
    if s.V == HALF64:
        raise BoundaryHit(f"v = 1/2 on the graph of f at R({s.k},{s.m})")
    rng, bits = splitmix64(s.rng)
    V = ((s.V << 1) & MASK64) | (bits >> 63)
    return replace(s, m=m2, k=k2, V=V, rng=rng)


def relative_orbit(s: RelState, steps: int, tab: SequenceTable) -> RelState:
    for _ in range(steps):
        s = relative_step(s, tab)
    return s


@dataclass
class RelBatch:
    """Many points sharing the index (k, m); fields are uint64 arrays."""

    m: int
    k: int
    U: np.ndarray
    V: np.ndarray
    rng: np.ndarray
    alive: np.ndarray

    @classmethod
    def sample(cls, m: int, k: int, count: int, seed: int) -> "RelBatch":
        gen = np.random.default_rng(seed)
        U = gen.integers(0, np.iinfo(np.uint64).max, size=count, dtype=np.uint64, endpoint=True)
        V = gen.integers(0, np.iinfo(np.uint64).max, size=count, dtype=np.uint64, endpoint=True)
        rng = gen.integers(0, np.iinfo(np.uint64).max, size=count, dtype=np.uint64, endpoint=True)
        return cls(m, k, U, V, rng, np.ones(count, dtype=bool))


_GOLD = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)


def _splitmix_np(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(over="ignore"):
        state = state + _GOLD
        z = state
        z = (z ^ (z >> np.uint64(30))) * _C1
        z = (z ^ (z >> np.uint64(27))) * _C2
    return state, z ^ (z >> np.uint64(31))


def relative_step_batch(b: RelBatch, tab: SequenceTable, steps: int = 1) -> RelBatch:
    """Vectorized :func:`relative_step`; points hitting v = 1/2 are marked dead."""
    m, k = b.m, b.k
    U, V, rng, alive = b.U.copy(), b.V.copy(), b.rng.copy(), b.alive.copy()
    half = np.uint64(HALF64)
    for _ in range(steps):
        ph = phase(k, m, tab)
        if ph == "swap":
            U, V = V, U
        elif ph == "halving":
            alive &= V != half
            rng, bits = _splitmix_np(rng)
            V = (V << np.uint64(1)) | (bits >> np.uint64(63))
        k, m = next_index(k, m, tab)
    return RelBatch(m, k, U, V, rng, alive)


def relative_embed(s: RelState, tab: SequenceTable) -> tuple[LogReal, LogReal]:
    return rectangle(s.k, s.m, tab).embed(s.u, s.v)


# -- disjointness -----------------------------------------------------------

@dataclass
class DisjointReport:
    m_start: int
    steps: int
    disjoint: bool
    min_gap_log: float
    closest_pair: tuple[int, int]
    pairs: int
    offending: tuple | None = None

    def to_dict(self) -> dict:
        return {"m_start": self.m_start, "steps": self.steps, "min_gap_log": self.min_gap_log,
                "disjoint": self.disjoint, "pairs": self.pairs,
                "closest_pair": list(self.closest_pair),
                "offending": None if self.offending is None else list(self.offending)}


def orbit_indices(m_start: int, steps: int, tab: SequenceTable, k_start: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(k, m) of the rectangles R(k_start, m_start), ... visited in ``steps`` steps (inclusive)."""
    ks, ms = [], []
    k, m, left = k_start, m_start, steps + 1
    while left > 0:
        G = tab.G(m)
        take = min(G - k, left)
        ks.append(np.arange(k, k + take, dtype=np.int64))
        ms.append(np.full(take, m, dtype=np.int64))
        left -= take
        k, m = 0, m + 1
    return np.concatenate(ks), np.concatenate(ms)


def _orbit_logs(ks, ms, tab):
    out = {n: np.empty(ks.size) for n in ("L", "B", "W", "H")}
    for m in np.unique(ms):
        sel = ms == m
        kk = ks[sel]
        out["L"][sel] = tab.log_L(kk, int(m))
        out["B"][sel] = tab.log_B(kk, int(m))
        out["W"][sel] = tab.log_W(kk, int(m))
        out["H"][sel] = tab.log_H(kk, int(m))
    return out


def check_disjoint(m_start: int, steps: int, tab: SequenceTable, raise_on_overlap: bool = True) -> DisjointReport:
    """Pairwise separation of the rectangles along the orbit of R(0, m_start)."""
    ks, ms = orbit_indices(m_start, steps, tab)
    if tab.params.M is not None and m_start <= tab.params.M:
        raise IndexOutOfRange(f"m_start must exceed M={tab.params.M}")
    lg = _orbit_logs(ks, ms, tab)
    xl, xh = lg["L"], np.logaddexp(lg["L"], lg["W"])
    yl, yh = lg["B"], np.logaddexp(lg["B"], lg["H"])
    n = ks.size
    best = (math.inf, (0, 0))
    offending = None
    for i in range(n - 1):
        j = np.arange(i + 1, n)
        # separated along an axis iff one interval ends strictly before the other starts
        sx = (xh[i] < xl[j]) | (xh[j] < xl[i])
        sy = (yh[i] < yl[j]) | (yh[j] < yl[i])
        sep = sx | sy
        if not np.all(sep):
            jj = int(j[np.argmin(sep)])
            offending = (i, jj)
            break
        with np.errstate(invalid="ignore"):
            gx = np.fmax(log_sub_arrays(xl[j], np.full(j.size, xh[i])), log_sub_arrays(np.full(j.size, xl[i]), xh[j]))
            gy = np.fmax(log_sub_arrays(yl[j], np.full(j.size, yh[i])), log_sub_arrays(np.full(j.size, yl[i]), yh[j]))
        gap = np.fmax(gx, gy)
        a = int(np.argmin(gap))
        if gap[a] < best[0]:
            best = (float(gap[a]), (i, int(j[a])))
    if offending is not None:
        i, j = offending
        pair = ((int(ks[i]), int(ms[i])), (int(ks[j]), int(ms[j])))
        rep = DisjointReport(m_start, steps, False, -math.inf, offending, n * (n - 1) // 2,
                             offending=pair)
        if raise_on_overlap:
            err = DisjointnessFailure(pair, f"R{pair[0]} and R{pair[1]} overlap")
            err.report = rep
            raise err
        return rep
    return DisjointReport(m_start, steps, True, best[0], best[1], n * (n - 1) // 2)


# -- Birkhoff statistics ------------------------------------------------------

def anchor_log_distance(ks, ms, tab: SequenceTable) -> np.ndarray:
    """log |(L, B)| for each visited rectangle."""
    lg = _orbit_logs(ks, ms, tab)
    return 0.5 * np.logaddexp(2 * lg["L"], 2 * lg["B"])


def birkhoff_stats(m_start: int, steps: int, radius: float, tab: SequenceTable) -> float:
    """Fraction of the first ``steps`` anchors within ``radius`` of the origin."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if radius >= math.sqrt(2.0):
        return 1.0
    ks, ms = orbit_indices(m_start, steps - 1, tab)
    d = anchor_log_distance(ks, ms, tab)
    return float(np.count_nonzero(d < math.log(radius))) / steps


def birkhoff_profile(m_start: int, scales, radius: float, tab: SequenceTable) -> list[tuple[int, float]]:
    return [(int(s), birkhoff_stats(m_start, int(s), radius, tab)) for s in scales]


def epoch_total(m_start: int, epochs: int, gamma: int) -> int:
    """Steps gamma^m + ... + gamma^{m+epochs-1} to go from R(0, m) to R(0, m+epochs)."""
    return sum(gamma ** (m_start + j) for j in range(epochs))


# -- cross-check against the literal map -----------------------------------------

@dataclass
class CrossCheck:
    steps: int
    compared: int
    unresolved: int         # steps whose subtraction is beyond double resolution
    max_error: float        # worst |log| error relative to its tolerance budget, in nats
    region_mismatches: int

    @property
    def ok(self) -> bool:
        return self.region_mismatches == 0 and self.max_error <= 0.0


EXPECTED_REGION = {"halving-low": "D0-", "halving-high": "D0+", "swap": "D1+"}
_RESOLUTION = 40 * math.log(2.0)     # keep 12 of the 52 mantissa bits as headroom


def crosscheck_with_map(tab: SequenceTable, prof, m_start: int, steps: int, seed: int = 0,
                        u: float | None = None, v: float | None = None) -> CrossCheck:
    """One-step commutation of the embedding with the literal map.

    At every step the relative state is embedded, pushed through the map
    and compared with the embedding of the advanced state.  The tolerance
    is 1e-12 plus kappa * 2^-52 in log magnitude, kappa being the condition
    number of the comparison or subtraction the map performs (x - e^{-eps1}
    at a swap, y against f = B + H/2 in the halving phase).  Steps with
    kappa > 2^40 are beyond what double-precision log magnitudes resolve
    and are only counted.
    """
    from .planar_map import PlanarPoint, Region, apply_map, classify

    p = tab.params
    gen = np.random.default_rng(seed)
    s = RelState.from_floats(m_start, 0, gen.uniform() if u is None else u,
                             gen.uniform() if v is None else v, seed=seed + 1)
    compared = unresolved = mismatches = 0
    worst = -math.inf
    for _ in range(steps):
        R = rectangle(s.k, s.m, tab)
        x, y = R.embed(s.u, s.v)
        ph = phase(s.k, s.m, tab)
        nxt = relative_step(s, tab)
        if ph == "swap":
            ex = tab.log_L_excess(s.k, s.m)
            log_kappa = x.logmag - float(np.logaddexp(ex, math.log(max(s.u, 1e-300)) + R.W.logmag))
            expect = "D1+"
        elif ph == "halving":
            upper = s.V >= HALF64
            expect = "D0+" if upper else "D0-"
            # deciding y against f = B + H/2, and forming y - H/2, both hinge on |v - 1/2| H
            offset = abs(s.V - HALF64) / TWO64
            log_kappa = y.logmag - (math.log(offset) + R.H.logmag) if offset else math.inf
        else:
            log_kappa, expect = 0.0, None
        if log_kappa >= _RESOLUTION:
            unresolved += 1
            s = nxt
            continue
        pt = PlanarPoint(x, y)
        reg = classify(pt, prof, p)
        if expect is not None and reg.value != expect:
            mismatches += 1
            s = nxt
            continue
        if expect is None and reg not in (Region.D0_PLUS, Region.D0_MINUS):
            mismatches += 1
            s = nxt
            continue
        img = apply_map(pt, prof, p)
        ex_x, ex_y = relative_embed(nxt, tab)
        tol = 1e-12 + math.exp(log_kappa) * 2.0 ** -52
        err = max(abs(img.x.logmag - ex_x.logmag), abs(img.y.logmag - ex_y.logmag)) - tol
        worst = max(worst, err)
        compared += 1
        s = nxt
    return CrossCheck(steps=steps, compared=compared, unresolved=unresolved,
                      max_error=worst, region_mismatches=mismatches)
