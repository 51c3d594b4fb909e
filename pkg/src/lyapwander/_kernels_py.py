"""Pure numpy implementations of the hot loops (fallback for the Cython module)."""
from __future__ import annotations

import numpy as np

OK, BOUNDARY, OUTSIDE = 0, 1, 2


def trace_lognorm(m0, gamma, N, eps1, eps2, log_a, log_b):
    """log||DF^n v|| for n = 1..N along the block itinerary.

    Component a starts in the e1 slot, b in the e2 slot; block j has length
    gamma^(m0+j) and components trade slots after each block.  Slot step
    counts are integers, so every entry is evaluated directly.
    """
    n = np.arange(1, N + 1, dtype=np.int64)
    even = np.zeros(N, dtype=np.int64)      # steps spent in even-indexed blocks
    start, j, length = 0, 0, gamma**m0
    while start < N:
        stop = min(start + length, N)
        seg = slice(start, stop)
        done = n[seg] - start               # steps taken inside this block
        base_even = even[start - 1] if start > 0 else 0
        if j % 2 == 0:
            even[seg] = base_even + done
        else:
            even[seg] = base_even
        start += length
        j += 1
        length *= gamma
    odd = n - even
    la = log_a + eps1 * even + eps2 * odd
    lb = log_b + eps2 * even + eps1 * odd
    return 0.5 * np.logaddexp(2 * la, 2 * lb)


def _profile(x, eps1, f_tab, eta_tab, d, d_next, coeffs):
    """Vectorized float profile lookup; returns (f, eta)."""
    K = f_tab.shape[0]
    f = np.zeros_like(x)
    eta = np.zeros_like(x)
    if K == 0:
        return f, eta
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    k0 = np.ceil(-lx / eps1)
    lo, hi = 1.0 - d_next, 1.0 + 2.0 * d + d_next
    found = np.zeros(x.shape, dtype=bool)
    for off in (-1, 0, 1):
        k = k0 + off
        valid = (~found) & (k >= 1) & (k <= K) & np.isfinite(k)
        if not np.any(valid):
            continue
        ki = np.where(valid, k, 1).astype(np.int64)
        xi = np.exp(lx + eps1 * ki)
        inside = valid & (xi >= lo) & (xi <= hi)
        if not np.any(inside):
            continue
        t = np.where(xi < 1.0, (xi - lo) / d_next, np.where(xi > 1.0 + 2.0 * d, (hi - xi) / d_next, 1.0))
        s = np.polynomial.polynomial.polyval(np.clip(t, 0.0, 1.0), coeffs)
        f = np.where(inside, f_tab[ki - 1] * s, f)
        eta = np.where(inside, eta_tab[ki - 1] * s, eta)
        found |= inside
    return f, eta


def iterate_points(xs, ys, steps, lam1, lam2, eps1, eps2, f_tab, eta_tab, d, d_next, coeffs):
    """Apply the float map ``steps`` times; returns (x, y, status)."""
    x = np.array(xs, dtype=np.float64, copy=True)
    y = np.array(ys, dtype=np.float64, copy=True)
    status = np.zeros(x.shape, dtype=np.int8)
    a, b = np.exp(-eps1), np.exp(-eps2)
    for _ in range(steps):
        live = status == OK
        if not np.any(live):
            break
        x, y, st = _step(x, y, lam1, lam2, eps1, a, b, f_tab, eta_tab, d, d_next, coeffs)
        status = np.where(live, st, status)
    return x, y, status


def _step(x, y, lam1, lam2, eps1, a, b, f_tab, eta_tab, d, d_next, coeffs):
    st = np.zeros(x.shape, dtype=np.int8)
    ay = np.abs(y)
    dl = np.where(y >= 0, 1.0, -1.0)
    left = x < a
    high = ay > b
    f, eta = _profile(np.where(left, x, 0.5), eps1, f_tab, eta_tab, d, d_next, coeffs)
    f = np.where(left, f, 0.0)
    eta = np.where(left, eta, 0.0)
    nx = np.where(left, lam1 * x, lam1 * (x - a))
    ny = np.where(high, lam2 * (y - dl * b), 0.0)
    low_left = left & ~high
    ny = np.where(low_left & (y > f), lam2 * (y - eta), ny)
    ny = np.where(low_left & (y < f), lam2 * y, ny)
    d1 = ~left & ~high
    nx = np.where(d1, dl * lam2 * y, nx)
    ny = np.where(d1, lam1 * (x - a), ny)
    bnd = (x == a) | (ay == b) | (low_left & (y == f)) | (d1 & (y == 0))
    st[bnd] = BOUNDARY
    out = ~bnd & ~((nx > 0) & (nx < 1) & (ny > -1) & (ny < 1))
    st[out] = OUTSIDE
    return np.where(bnd | out, x, nx), np.where(bnd | out, y, ny), st


def cell_index(x, y, n):
    ix = np.clip((x * n).astype(np.int64), 0, n - 1)
    iy = np.clip(((y + 1.0) * 0.5 * n).astype(np.int64), 0, n - 1)
    return ix * n + iy


def first_hits(xs, ys, support, n, horizon, lam1, lam2, eps1, eps2, f_tab, eta_tab, d, d_next, coeffs):
    """First j in 1..horizon with F^j(x) in a support cell, else -1."""
    x = np.array(xs, dtype=np.float64, copy=True)
    y = np.array(ys, dtype=np.float64, copy=True)
    support = np.asarray(support).astype(bool)
    hit = np.full(x.shape, -1, dtype=np.int64)
    alive = np.ones(x.shape, dtype=bool)
    a, b = np.exp(-eps1), np.exp(-eps2)
    for j in range(1, horizon + 1):
        if not np.any(alive):
            break
        x, y, st = _step(x, y, lam1, lam2, eps1, a, b, f_tab, eta_tab, d, d_next, coeffs)
        alive &= st == OK
        inside = alive & support[cell_index(x, y, n)]
        hit[inside] = j
        alive &= ~inside
    return hit
