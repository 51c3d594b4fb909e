"""Verification suites bundled for the ``verify`` command and the acceptance tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cocycle import block_aligned_time, closed_form_lognorm, cocycle_lognorm, u_mn
from .errors import CoverageFailure, DisjointnessFailure
from .parameters import Params
from .sequences import (STATED_CHECKS, WANDERING_CHECKS, SequenceTable, inequality_suite,
                        recurrence_suite)
from .wandering import advance_rectangle, check_disjoint, epoch_total


@dataclass
class SuiteResult:
    name: str
    passed: int
    failed: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "failed": self.failed, "ok": self.ok,
                "failures": self.failures[:20]}


def oracle_points(p: Params, m_values=(2, 3, 4), n_values=(1, 2, 3), step_ceiling: int = 1 << 40):
    """Block-aligned (m, n, k) sample points: k at 0, u/2, u, (u+G)/2, G and near the ends."""
    pts = []
    g = p.gamma
    for m in m_values:
        for n in n_values:
            G = g ** (m + 2 * n)
            u = u_mn(m, n, g)
            for k in sorted({0, 1, u // 2, u - 1, u, u + 1, (u + G) // 2, G - 1, G}):
                if block_aligned_time(m, n, k, g) <= step_ceiling:
                    pts.append((m, n, k))
    return pts


ORACLE_VECTORS = ((2 ** -0.5, 2 ** -0.5), (1.0, 0.0), (0.0, 1.0), (0.6, -0.8), (3.0, 0.25))


def oracle_suite(p: Params, tol: float = 1e-10, vectors=ORACLE_VECTORS) -> SuiteResult:
    passed, fails = 0, []
    for m, n, k in oracle_points(p):
        T = block_aligned_time(m, n, k, p.gamma)
        for a, b in vectors:
            it = cocycle_lognorm(m, T, a, b, p)
            cf = closed_form_lognorm(m, n, k, a, b, p)
            err = abs(it - cf) / max(1.0, abs(it))
            if err <= tol:
                passed += 1
            else:
                fails.append({"m": m, "n": n, "k": k, "alpha": a, "beta": b, "rel_err": err})
    return SuiteResult("oracle", passed, len(fails), fails)


def recurrences(tab: SequenceTable, M: int, tol: float = 1e-12) -> SuiteResult:
    res = recurrence_suite(tab, M + 1, M + 3, tol)
    fails = [{"identity": r.name, "m": r.m, "max_error": r.max_error} for r in res if not r.ok]
    return SuiteResult("recurrences", len(res) - len(fails), len(fails), fails)


def inequalities(tab: SequenceTable, M: int, checks, name: str) -> SuiteResult:
    res = inequality_suite(tab, M, 3, checks)
    fails = [{"check": c.name, "m": c.m, "k": c.k_worst, "slack": c.slack} for c in res if not c.ok]
    return SuiteResult(name, len(res) - len(fails), len(fails), fails)


def coverage(tab: SequenceTable, M: int, epochs: int = 2) -> SuiteResult:
    k, m = 0, M + 1
    steps = epoch_total(M + 1, epochs, tab.params.gamma)
    try:
        for i in range(steps):
            k, m = advance_rectangle(k, m, tab)
    except CoverageFailure as exc:
        return SuiteResult("coverage", i, 1, [{"k": k, "m": m, "error": str(exc)}])
    return SuiteResult("coverage", steps, 0)


def disjointness(tab: SequenceTable, M: int, epochs: int = 2) -> SuiteResult:
    steps = epoch_total(M + 1, epochs, tab.params.gamma)
    try:
        rep = check_disjoint(M + 1, steps, tab)
    except DisjointnessFailure as exc:
        return SuiteResult("disjointness", 0, 1, [{"pair": [list(x) for x in exc.pair]}])
    return SuiteResult("disjointness", rep.pairs, 0, [])


def run_verify(p: Params, table: SequenceTable | None = None, wandering_only: bool = False) -> dict:
    """All suites for Params with a resolved base epoch M."""
    if p.M is None:
        raise ValueError("no base epoch M could be resolved for these parameters")
    M = p.M
    tab = table if table is not None else SequenceTable(p, m_max=M + 6)
    suites = [recurrences(tab, M)]
    if not wandering_only:
        suites.append(inequalities(tab, M, STATED_CHECKS, "inequalities"))
    suites += [inequalities(tab, M, WANDERING_CHECKS, "wandering_inequalities"),
               oracle_suite(p), coverage(tab, M), disjointness(tab, M)]
    return {"M": M, "ok": all(s.ok for s in suites), "suites": [s.to_dict() for s in suites]}
