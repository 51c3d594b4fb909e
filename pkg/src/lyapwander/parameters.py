"""Parameter validation, derived constants and limit exponents."""
from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import BoundViolation, NotFound

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class Params:
    """Validated parameter bundle of the map family.

    ``M`` is the base epoch of the wandering construction; it is ``None``
    when no epoch up to the search ceiling satisfies the geometric checks.
    """

    r: int
    gamma: int
    eps1: float
    eps2: float
    sigma: float
    lam1: float
    lam2: float
    M: int | None = None

    @property
    def eps1_bound(self) -> float:
        return eps1_bound(self.r, self.gamma)

    def to_dict(self) -> dict:
        return {"r": self.r, "gamma": self.gamma, "eps1": self.eps1, "eps2": self.eps2}

    def with_epoch(self, M: int | None) -> "Params":
        return replace(self, M=M)


@dataclass(frozen=True)
class LimitExponents:
    xi0: float
    xi1: float
    mean: float
    rho: float

    @property
    def interval_A1(self) -> tuple[float, float]:
        """Accumulation interval for a generic tangent vector."""
        return (self.mean, self.xi0)

    @property
    def interval_A2(self) -> tuple[float, float]:
        """Accumulation interval along a coordinate axis."""
        return (self.xi1, self.xi0)


def eps1_bound(r: int, gamma: int) -> float:
    """Upper bound gamma^-3 (2 - 1/r)^2 log 2 on eps1."""
    return (2.0 - 1.0 / r) ** 2 * LOG2 / gamma**3


def _is_int(x) -> bool:
    return isinstance(x, numbers.Integral) and not isinstance(x, bool)


def validate_params(r, gamma, eps1, eps2, M=None, *, resolve_epoch: bool = True) -> Params:
    """Check the constraints ``gamma > r >= 1`` and ``0 < eps2 < eps1 < bound``.

    When ``M`` is omitted and ``resolve_epoch`` is true, the smallest base
    epoch passing the wandering checks is searched for; it is left as
    ``None`` if the search fails.
    """
    if not (_is_int(r) and _is_int(gamma)):
        raise BoundViolation("integrality", float("nan"), "r and gamma must be integers")
    eps1 = float(eps1)
    eps2 = float(eps2)
    if not (math.isfinite(eps1) and math.isfinite(eps2)):
        raise BoundViolation("finiteness", float("nan"), "eps1 and eps2 must be finite")
    r, gamma = int(r), int(gamma)
    if r < 1:
        raise BoundViolation("r>=1", r - 1)
    if gamma <= r:
        raise BoundViolation("gamma>r", gamma - r)
    if eps2 <= 0:
        raise BoundViolation("eps2>0", eps2)
    if eps2 >= eps1:
        raise BoundViolation("eps2<eps1", eps1 - eps2)
    bound = eps1_bound(r, gamma)
    if eps1 >= bound:
        raise BoundViolation("eps1 bound", bound - eps1,
                             f"eps1={eps1} exceeds gamma^-3(2-1/r)^2 log2 = {bound:.10g}")
    p = Params(r=r, gamma=gamma, eps1=eps1, eps2=eps2, sigma=1.0 - eps2 / eps1,
               lam1=math.exp(eps1), lam2=math.exp(eps2), M=None)
    if M is not None:
        if not _is_int(M) or M < 1:
            raise BoundViolation("M>=1", float("nan"), f"M must be a positive integer, got {M!r}")
        return p.with_epoch(int(M))
    if resolve_epoch:
        from .sequences import WANDERING_CHECKS
        try:
            return p.with_epoch(find_min_epoch(p, checks=WANDERING_CHECKS))
        except NotFound:
            return p
    return p


def revalidate(p: Params) -> Params:
    return validate_params(p.r, p.gamma, p.eps1, p.eps2, M=p.M, resolve_epoch=p.M is not None)


def params_from_sigma(sigma: float, eps1: float = 0.025, r: int = 1, gamma: int = 3, **kw) -> Params:
    if not 0.0 < sigma < 1.0:
        raise BoundViolation("0<sigma<1", min(sigma, 1.0 - sigma))
    return validate_params(r, gamma, eps1, eps1 * (1.0 - sigma), **kw)


REFERENCE = dict(r=1, gamma=3, eps1=0.025, eps2=0.02)


def reference_params() -> Params:
    return validate_params(**REFERENCE)


def limit_exponents(p: Params) -> LimitExponents:
    g = p.gamma
    return LimitExponents(
        xi0=(g * p.eps1 + p.eps2) / (g + 1),
        xi1=(p.eps1 + g * p.eps2) / (g + 1),
        mean=0.5 * (p.eps1 + p.eps2),
        rho=p.eps1 / (g + 1),
    )


def find_min_epoch(p: Params, m_probe: int = 3, ceiling: int = 40, checks=None) -> int:
    """Smallest M such that every check holds for all epochs M+1..M+m_probe.

    ``checks`` is a tuple of inequality names from :mod:`.sequences`; the
    default is the full set of inequalities stated for the construction.
    """
    from .sequences import STATED_CHECKS, SequenceTable, check_epoch

    if m_probe < 1:
        raise ValueError("m_probe must be >= 1")
    checks = STATED_CHECKS if checks is None else tuple(checks)
    # epochs whose step counts overflow 62 bits are never probed
    m_cap = max(m for m in range(1, 200) if p.gamma ** (m + 1) < 2**62)
    ceiling = min(ceiling, m_cap - m_probe)
    table = SequenceTable(p, m_max=ceiling + m_probe + 1)
    ok = {}
    failures = []

    def epoch_ok(m):
        if m not in ok:
            res = check_epoch(table, m, checks)
            ok[m] = all(c.ok for c in res)
            failures.extend(c for c in res if not c.ok)
        return ok[m]

    for M in range(1, ceiling + 1):
        if all(epoch_ok(m) for m in range(M + 1, M + m_probe + 1)):
            return M
    worst = {}
    for c in failures:
        if c.name not in worst or c.m < worst[c.name].m:
            worst[c.name] = c
    raise NotFound(f"no M <= {ceiling} passes {', '.join(checks)}; failing: "
                   + ", ".join(f"{n} (slack {c.slack:.3g} at m={c.m}, k={c.k_worst})" for n, c in worst.items()),
                   failures=list(worst.values()))


# -- JSON config -------------------------------------------------------

CONFIG_KEYS = ("r", "gamma", "eps1", "eps2")


def load_params(path, **kw) -> Params:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    missing = [k for k in CONFIG_KEYS if k not in data]
    if missing:
        raise KeyError(f"{path}: missing keys {missing}")
    return validate_params(data["r"], data["gamma"], data["eps1"], data["eps2"], **kw)


def save_params(p: Params, path) -> None:
    Path(path).write_text(json.dumps(p.to_dict(), indent=2) + "\n", encoding="utf-8")
