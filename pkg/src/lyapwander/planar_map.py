"""The piecewise expanding map on D = (0,1) x (-1,1).

Points carry :class:`LogReal` coordinates so that orbits can be followed
deep towards the origin.  The plateau profiles ``f`` and ``eta`` are built
from a :class:`SequenceTable` and smoothed across the collars
``K_k \\ J_k`` with the order-``r`` smoothstep polynomial.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BoundaryHit, IndexOutOfRange, OutsideDomain
from .logreal import ONE, ZERO, LogReal
from .parameters import LOG2, Params
from .sequences import SequenceTable


class Region(enum.Enum):
    D0_PLUS = "D0+"
    D0_MINUS = "D0-"
    D1_PLUS = "D1+"
    D1_MINUS = "D1-"
    D2_PLUS = "D2+"
    D2_MINUS = "D2-"
    D3_PLUS = "D3+"
    D3_MINUS = "D3-"
    BOUNDARY = "BOUNDARY"

    @property
    def delta(self) -> int:
        return 1 if self.value.endswith("+") else -1


@dataclass(frozen=True)
class PlanarPoint:
    x: LogReal
    y: LogReal

    @classmethod
    def from_floats(cls, x: float, y: float) -> "PlanarPoint":
        return cls(LogReal.from_float(x), LogReal.from_float(y))

    def to_floats(self) -> tuple[float, float]:
        return float(self.x), float(self.y)

    def check_domain(self) -> None:
        if self.x.sign != 1 or self.x >= ONE:
            raise OutsideDomain(f"x={self.x!r} not in (0,1)")
        if abs(self.y) >= ONE:
            raise OutsideDomain(f"y={self.y!r} not in (-1,1)")


# -- smoothstep -----------------------------------------------------------

@lru_cache(maxsize=None)
def smoothstep_coeffs(r: int) -> np.ndarray:
    """Power-basis coefficients c_j of S_r(t) = sum_j c_j t^j (degree 2r+1)."""
    c = np.zeros(2 * r + 2)
    for n in range(r + 1):
        c[r + 1 + n] = math.comb(r + n, n) * math.comb(2 * r + 1, r - n) * (-1) ** n
    return c


def smoothstep(t, r: int):
    """C^r ramp from 0 at t=0 to 1 at t=1 with r vanishing derivatives at both ends."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return np.polynomial.polynomial.polyval(t, smoothstep_coeffs(r))


def smoothstep_deriv(t, r: int):
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    scale = math.factorial(2 * r + 1) / math.factorial(r) ** 2
    return np.where(inside, scale * (t * (1 - t)) ** r, 0.0)


# -- profiles ---------------------------------------------------------------

@dataclass(frozen=True)
class ProfileValue:
    f: LogReal
    eta: LogReal
    deta: float         # d eta / dx
    k: int | None       # collar index, None outside every K_k
    part: str           # "plateau", "left", "right" or "zero"


class ProfilePair:
    """Plateau functions f and eta on [0, e^{-eps1}].

    Collars ``k <= gamma^M`` (and all x outside the K_k) carry f = eta = 0.
    In relative coordinates xi = x e^{eps1 k}: J_k = [1, 1+2d],
    K_k = [1-d', 1+2d+d'] with d = expm1(eps1)/6 and d' = d e^{-eps1}.
    """

    def __init__(self, params: Params, table: SequenceTable | None = None, m_max: int = 20):
        if params.M is None:
            raise ValueError("params carry no base epoch M")
        self.params = params
        self.table = table if table is not None else SequenceTable(params, m_max=m_max)
        self.r = params.r
        self.d = math.expm1(params.eps1) / 6.0
        self.d_next = self.d * math.exp(-params.eps1)
        self.k_active_min = params.gamma**params.M + 1
        self.k_max = params.gamma**self.table.m_max

    def epoch_of(self, k: int) -> int:
        """m(k) with gamma^(m-1) < k <= gamma^m."""
        if k < 1:
            raise IndexOutOfRange("collar index must be >= 1")
        m, g = 0, 1
        while g < k:
            g *= self.params.gamma
            m += 1
        return m

    def plateau_logs(self, k: int) -> tuple[float, float]:
        """(log f, log eta) on J_k; (-inf, -inf) for inactive collars."""
        if k < self.k_active_min:
            return float("-inf"), float("-inf")
        if k > self.k_max:
            raise IndexOutOfRange(f"collar {k} beyond table range (k_max={self.k_max})")
        m = self.epoch_of(k)
        G = self.table.G(m)
        lb = self.table.log_B(G - k, m)
        leta = self.table.log_H(G - k, m) - LOG2
        return float(np.logaddexp(lb, leta)), leta

    def locate(self, x: LogReal) -> tuple[int | None, str, float]:
        """Collar index, part and smoothstep parameter t for x."""
        p = self.params
        if x.sign != 1:
            return None, "zero", 0.0
        lx = x.logmag
        if lx >= -p.eps1:
            return None, "zero", 0.0
        k0 = max(1, math.ceil(-lx / p.eps1))
        for k in (k0 - 1, k0, k0 + 1):
            if k < 1:
                continue
            xi = math.exp(lx + p.eps1 * k)
            lo, hi = 1.0 - self.d_next, 1.0 + 2 * self.d + self.d_next
            if not lo <= xi <= hi:
                continue
            if 1.0 <= xi <= 1.0 + 2 * self.d:
                return k, "plateau", 1.0
            if xi < 1.0:
                return k, "left", (xi - lo) / self.d_next
            return k, "right", (hi - xi) / self.d_next
        return None, "zero", 0.0

    def __call__(self, x) -> ProfileValue:
        x = LogReal.coerce(x)
        k, part, t = self.locate(x)
        if k is None or k < self.k_active_min:
            return ProfileValue(ZERO, ZERO, 0.0, k, "zero" if k is None else part)
        lf, le = self.plateau_logs(k)
        if part == "plateau":
            return ProfileValue(LogReal.exp(lf), LogReal.exp(le), 0.0, k, part)
        s = float(smoothstep(t, self.r))
        ds = float(smoothstep_deriv(t, self.r))
        # dt/dx = +-1 / Delta(k), Delta(k) = d' e^{-eps1 k}
        dtdx = math.exp(self.params.eps1 * k) / self.d_next * (1 if part == "left" else -1)
        if s <= 0.0:
            return ProfileValue(ZERO, ZERO, 0.0, k, part)
        ls = math.log(s)
        deta = ds * dtdx * math.exp(le) if le > -700 else 0.0
        return ProfileValue(LogReal.exp(lf + ls), LogReal.exp(le + ls), deta, k, part)

    def float_tables(self, k_max: int | None = None) -> dict:
        """Per-collar float arrays (index k-1) used by the compiled kernels.

        Plateau values below double range underflow to 0; such collars lie
        far inside the first cell of any practical grid.
        """
        p = self.params
        if k_max is None:
            k_max = min(self.k_max, p.gamma ** min(self.table.m_max, 8))
        k = np.arange(1, k_max + 1)
        lf = np.full(k_max, -np.inf)
        le = np.full(k_max, -np.inf)
        for i, kk in enumerate(k):
            lf[i], le[i] = self.plateau_logs(int(kk))
        with np.errstate(under="ignore"):
            return {"f": np.exp(lf), "eta": np.exp(le), "d": self.d, "d_next": self.d_next,
                    "coeffs": smoothstep_coeffs(self.r), "r": self.r}


def profile(x, prof: ProfilePair) -> tuple[LogReal, LogReal]:
    v = prof(x)
    return v.f, v.eta


# -- map ---------------------------------------------------------------------

def classify(pt: PlanarPoint, prof: ProfilePair | None, p: Params) -> Region:
    """Region of the eight-piece partition containing pt (``prof=None``: f = eta = 0)."""
    pt.check_domain()
    a_log, b_log = -p.eps1, -p.eps2
    x, y = pt.x, pt.y
    if x.logmag == a_log:
        return Region.BOUNDARY
    ay = abs(y)
    if ay.sign and ay.logmag == b_log:
        return Region.BOUNDARY
    delta = 1 if y.sign >= 0 else -1
    left = x.logmag < a_log
    high = ay.sign and ay.logmag > b_log
    if high:
        if left:
            return Region.D2_PLUS if delta > 0 else Region.D2_MINUS
        return Region.D3_PLUS if delta > 0 else Region.D3_MINUS
    if not left:
        if y.sign == 0:
            return Region.BOUNDARY
        return Region.D1_PLUS if delta > 0 else Region.D1_MINUS
    f = prof(x).f if prof is not None else ZERO
    if y == f:
        return Region.BOUNDARY
    return Region.D0_PLUS if y > f else Region.D0_MINUS


def apply_map(pt: PlanarPoint, prof: ProfilePair | None, p: Params) -> PlanarPoint:
    reg = classify(pt, prof, p)
    if reg is Region.BOUNDARY:
        raise BoundaryHit(f"{pt!r} lies on a partition curve")
    x, y = pt.x, pt.y
    a = LogReal.exp(-p.eps1)
    b = LogReal.exp(-p.eps2)
    e1, e2 = p.eps1, p.eps2
    if reg is Region.D0_PLUS:
        eta = prof(x).eta if prof is not None else ZERO
        out = PlanarPoint(x.scale_log(e1), (y - eta).scale_log(e2))
    elif reg is Region.D0_MINUS:
        out = PlanarPoint(x.scale_log(e1), y.scale_log(e2))
    elif reg in (Region.D1_PLUS, Region.D1_MINUS):
        out = PlanarPoint((y * reg.delta).scale_log(e2), (x - a).scale_log(e1))
    elif reg in (Region.D2_PLUS, Region.D2_MINUS):
        out = PlanarPoint(x.scale_log(e1), (y - b * reg.delta).scale_log(e2))
    else:
        out = PlanarPoint((x - a).scale_log(e1), (y - b * reg.delta).scale_log(e2))
    out.check_domain()
    return out


def jacobian(pt: PlanarPoint, prof: ProfilePair | None, p: Params) -> np.ndarray:
    reg = classify(pt, prof, p)
    if reg is Region.BOUNDARY:
        raise BoundaryHit(f"{pt!r} lies on a partition curve")
    l1, l2 = p.lam1, p.lam2
    if reg is Region.D0_PLUS:
        deta = prof(pt.x).deta if prof is not None else 0.0
        return np.array([[l1, 0.0], [-l2 * deta, l2]])
    if reg in (Region.D1_PLUS, Region.D1_MINUS):
        return np.array([[0.0, reg.delta * l2], [l1, 0.0]])
    return np.array([[l1, 0.0], [0.0, l2]])


def apply_map_float(x: float, y: float, prof: ProfilePair | None, p: Params) -> tuple[float, float]:
    """Plain-double evaluation, used as a cross-check over the first few steps."""
    a, b = math.exp(-p.eps1), math.exp(-p.eps2)
    if not (0 < x < 1 and -1 < y < 1):
        raise OutsideDomain(f"({x}, {y}) not in D")
    if x == a or abs(y) == b:
        raise BoundaryHit(f"({x}, {y}) on a partition curve")
    d = 1.0 if y >= 0 else -1.0
    if abs(y) > b:
        if x < a:
            return p.lam1 * x, p.lam2 * (y - d * b)
        return p.lam1 * (x - a), p.lam2 * (y - d * b)
    if x > a:
        if y == 0:
            raise BoundaryHit(f"({x}, 0) on a partition curve")
        return d * p.lam2 * y, p.lam1 * (x - a)
    f, eta = (0.0, 0.0)
    if prof is not None:
        v = prof(x)
        f, eta = float(v.f), float(v.eta)
    if y == f:
        raise BoundaryHit(f"({x}, {y}) on the graph of f")
    if y > f:
        return p.lam1 * x, p.lam2 * (y - eta)
    return p.lam1 * x, p.lam2 * y
