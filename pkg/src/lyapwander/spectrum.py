"""Ulam discretization of the transfer operator and first-entry statistics.

The grid has n x n cells over D, cell ``ix * n + iy`` covering
x in [ix/n, (ix+1)/n), y in [-1 + 2 iy/n, -1 + 2 (iy+1)/n).  Because the map
expands by only lam2 = e^{eps2} per step, a one-step Ulam matrix is nearly
diagonal and its corner cell at the origin absorbs everything; the
operator is therefore built for the iterate F^q with q = ceil(log 2 / eps2)
(about one doubling of length scales).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy import ndimage

from . import kernels
from .errors import NoConvergence
from .parameters import Params
from .planar_map import ProfilePair, smoothstep_coeffs
from .sequences import SequenceTable
from .wandering import TWO64, RelBatch, orbit_indices, relative_step_batch


@dataclass(frozen=True)
class MapSystem:
    """Float tables handed to the kernels; empty profile tables mean f = eta = 0."""

    name: str
    params: Params
    f_tab: np.ndarray
    eta_tab: np.ndarray
    d: float
    d_next: float
    coeffs: np.ndarray

    def _args(self):
        p = self.params
        return (p.lam1, p.lam2, p.eps1, p.eps2, self.f_tab, self.eta_tab, self.d, self.d_next, self.coeffs)

    def iterate(self, x, y, steps: int):
        return kernels.iterate_points(np.ascontiguousarray(x, dtype=float),
                                      np.ascontiguousarray(y, dtype=float), int(steps), *self._args())

    def first_hits(self, x, y, support: np.ndarray, n: int, horizon: int) -> np.ndarray:
        return kernels.first_hits(np.ascontiguousarray(x, dtype=float), np.ascontiguousarray(y, dtype=float),
                                  np.ascontiguousarray(support.ravel(), dtype=np.uint8), n, horizon,
                                  *self._args())


def analytic_skeleton(p: Params) -> MapSystem:
    """The family member with f = eta = 0: piecewise affine."""
    d = math.expm1(p.eps1) / 6.0
    return MapSystem("analytic-skeleton", p, np.zeros(0), np.zeros(0), d, d * math.exp(-p.eps1),
                     smoothstep_coeffs(p.r))


def sigma_family(p: Params, prof: ProfilePair | None = None, k_max: int | None = None) -> MapSystem:
    prof = prof if prof is not None else ProfilePair(p)
    t = prof.float_tables(k_max)
    return MapSystem("sigma-family", p, t["f"], t["eta"], t["d"], t["d_next"], t["coeffs"])


def default_steps(p: Params) -> int:
    return math.ceil(math.log(2.0) / p.eps2)


@dataclass
class UlamOperator:
    n: int
    s: int
    seed: int
    steps: int
    system: str
    P: sp.csr_matrix
    dropped: int            # samples whose orbit met a partition curve

    @property
    def row_sums(self) -> np.ndarray:
        return np.asarray(self.P.sum(axis=1)).ravel()


def cell_of(x, y, n: int) -> np.ndarray:
    return kernels.cell_index(np.asarray(x, dtype=float), np.asarray(y, dtype=float), n)


def build_ulam(system: MapSystem, n: int, s: int = 4, seed: int = 0, steps: int | None = None) -> UlamOperator:
    """Row-stochastic matrix of sampled F^steps transitions between cells.

    Each cell carries s x s points, one per sub-cell, at the sub-cell midpoint
    plus a seeded jitter of at most a quarter sub-cell, so no sample sits on
    a grid-aligned partition curve.
    """
    if n < 2 or s < 2:
        raise ValueError("need n, s >= 2")
    steps = default_steps(system.params) if steps is None else int(steps)
    rng = np.random.default_rng(seed)
    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    sub = (np.arange(s) + 0.5) / s
    su, sv = np.meshgrid(sub, sub, indexing="ij")
    jit = rng.uniform(-0.25 / s, 0.25 / s, size=(2, n, n, s, s))
    X = ((ix[..., None, None] + su + jit[0]) / n).ravel()
    Y = (-1.0 + 2.0 * (iy[..., None, None] + sv + jit[1]) / n).ravel()
    xo, yo, st = system.iterate(X, Y, steps)
    src = np.repeat(np.arange(n * n), s * s)
    ok = st == kernels.OK
    dst = cell_of(xo, yo, n)
    counts = sp.csr_matrix((np.ones(int(ok.sum())), (src[ok], dst[ok])), shape=(n * n, n * n))
    counts.sum_duplicates()
    valid = np.bincount(src[ok], minlength=n * n).astype(float)
    empty = valid == 0
    if np.any(empty):
        # no surviving sample: keep the row stochastic with a self-loop
        e = np.flatnonzero(empty)
        counts = counts + sp.csr_matrix((np.ones(e.size), (e, e)), shape=counts.shape)
        valid[empty] = 1.0
    P = sp.diags(1.0 / valid) @ counts
    return UlamOperator(n=n, s=s, seed=seed, steps=steps, system=system.name,
                        P=sp.csr_matrix(P), dropped=int((~ok).sum()))


@dataclass
class SpectralData:
    eigenvalues: np.ndarray         # sorted by decreasing modulus, eigenvalues[0] = Perron value
    vectors: np.ndarray             # left eigenvectors as columns (cell weights)
    residuals: np.ndarray           # ||vP - lam v||_1 / ||v||_1
    density: np.ndarray             # Perron left vector, nonnegative, sums to 1
    n: int
    iterations: int
    power_deltas: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        return 1.0 - float(abs(self.eigenvalues[1])) if self.eigenvalues.size > 1 else float("nan")


def perron_vector(P: sp.spmatrix, tol: float = 1e-12, max_iter: int = 200000, record: int = 0):
    """Left fixed vector of a row-stochastic P by power iteration from the uniform density."""
    PT = sp.csr_matrix(P.T)
    v = np.full(P.shape[0], 1.0 / P.shape[0])
    deltas = []
    for it in range(1, max_iter + 1):
        w = PT @ v
        w /= w.sum()
        delta = float(np.abs(w - v).sum())
        if record and (it <= record):
            deltas.append(delta)
        v = w
        if delta < tol:
            return v, it, deltas
    raise NoConvergence(max_iter, f"power iteration: ||vP - v||_1 = {delta:.3g} after {max_iter} steps")


def leading_spectrum(op: UlamOperator, count: int = 6, tol: float = 1e-10, max_iter: int = 200000) -> SpectralData:
    """Perron pair by power iteration, then the next eigenvalues of the deflated operator."""
    if not 1 <= count <= 10:
        raise ValueError("count must be in 1..10")
    P = op.P
    N = P.shape[0]
    h, iters, deltas = perron_vector(P, tol=tol * 1e-2, max_iter=max_iter, record=200)
    PT = sp.csr_matrix(P.T)
    lam1 = float(h @ (P @ np.ones(N)))  # = 1 for a stochastic matrix with h summing to 1
    vals = [complex(lam1)]
    vecs = [h.astype(complex)]
    if count > 1:
        ones = np.ones(N)
        # P^T - h 1^T annihilates h and leaves the other left eigenvectors (1^T v = 0) in place
        defl = sla.LinearOperator((N, N), matvec=lambda x: PT @ x - h * (ones @ x), dtype=float)
        try:
            w, V = sla.eigs(defl, k=min(count - 1, N - 2), which="LM", tol=tol * 1e-2, maxiter=max_iter)
        except sla.ArpackNoConvergence as exc:
            raise NoConvergence(max_iter, f"ARPACK: {exc}") from exc
        order = np.argsort(-np.abs(w))
        vals += list(w[order])
        vecs += [V[:, i] for i in order]
    vals = np.array(vals)
    V = np.column_stack(vecs)
    res = np.array([np.abs(PT @ V[:, i] - vals[i] * V[:, i]).sum() / np.abs(V[:, i]).sum()
                    for i in range(V.shape[1])])
    bad = np.flatnonzero(res > tol)
    if bad.size:
        raise NoConvergence(max_iter, f"residuals {res[bad]} exceed tol {tol}")
    return SpectralData(eigenvalues=vals, vectors=V, residuals=res, density=h, n=op.n,
                        iterations=iters, power_deltas=deltas)


@dataclass
class Supports:
    mask: np.ndarray            # (n, n) bool, indexed [ix, iy]
    labels: np.ndarray
    q_hat: int
    threshold: float

    @property
    def flat(self) -> np.ndarray:
        return self.mask.ravel()


def acim_supports(data, threshold: float = 0.01, n: int | None = None) -> Supports:
    """Connected components of cells whose density is at least threshold * max."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    dens = data.density if isinstance(data, SpectralData) else np.asarray(data, dtype=float)
    n = data.n if isinstance(data, SpectralData) else (n or int(round(math.sqrt(dens.size))))
    dens = np.abs(dens.reshape(n, n))
    mask = dens >= threshold * dens.max()
    labels, q = ndimage.label(mask)
    return Supports(mask=mask, labels=labels, q_hat=int(q), threshold=threshold)


@dataclass
class HitStats:
    initial_set: str
    horizon: int
    samples: int
    first_hit: np.ndarray       # -1 where no entry within the horizon

    @property
    def hit_fraction(self) -> float:
        return float(np.count_nonzero(self.first_hit >= 0)) / max(1, self.samples)

    def fraction_by_horizon(self, horizons) -> dict:
        return {int(h): float(np.count_nonzero((self.first_hit >= 0) & (self.first_hit <= h))) / max(1, self.samples)
                for h in horizons}


def _parse_initial(initial_set: str):
    if initial_set == "uniform-D":
        return "uniform", None
    if initial_set.startswith("wandering-rectangle(") and initial_set.endswith(")"):
        return "wandering", int(initial_set[len("wandering-rectangle("):-1])
    raise ValueError(f"unknown initial set {initial_set!r}")


def hit_time_stats(system: MapSystem, initial_set: str, supports: Supports, horizon: int,
                   samples: int, seed: int = 0, table: SequenceTable | None = None) -> HitStats:
    """First n in 1..horizon with F^n(x) in a support cell (-1: never).

    Uniform samples are iterated with the float map.  Wandering-rectangle
    samples follow the exact relative orbit from R(0, m) and are embedded
    into absolute coordinates at every step to find their cell.
    """
    kind, m = _parse_initial(initial_set)
    n = supports.mask.shape[0]
    if horizon <= 0:
        return HitStats(initial_set, horizon, samples, np.full(samples, -1, dtype=np.int64))
    if kind == "uniform":
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, 1.0, samples)
        y = rng.uniform(-1.0, 1.0, samples)
        x = np.where(x == 0.0, 0.5, x)
        hits = system.first_hits(x, y, supports.mask, n, horizon)
        return HitStats(initial_set, horizon, samples, hits)
    tab = table if table is not None else SequenceTable(system.params, m_max=m + 8)
    batch = RelBatch.sample(m, 0, samples, seed)
    hits = np.full(samples, -1, dtype=np.int64)
    sup = supports.flat
    for j in range(1, horizon + 1):
        batch = relative_step_batch(batch, tab)
        k, mm = batch.k, batch.m
        lL, lB = tab.log_L(k, mm), tab.log_B(k, mm)
        lW, lH = tab.log_W(k, mm), tab.log_H(k, mm)
        u = batch.U.astype(float) / TWO64
        v = batch.V.astype(float) / TWO64
        with np.errstate(under="ignore", divide="ignore"):
            x = np.exp(lL) + u * np.exp(lW)
            y = np.exp(lB) + v * np.exp(lH)
        fresh = (hits < 0) & batch.alive & sup[cell_of(x, y, n)]
        hits[fresh] = j
        if np.all(hits >= 0):
            break
    return HitStats(initial_set, horizon, samples, hits)
