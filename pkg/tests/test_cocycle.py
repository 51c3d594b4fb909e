import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapwander.cocycle import (BlockItinerary, blocks_total, c_coeff, closed_form_lognorm,
                                cocycle_lognorm, cocycle_vector, exponent_trace, log_c_coeff,
                                omega_interval_estimate, phi, phi_derivative, u_mn)
from lyapwander.errors import StepOverflow, WindowTooShort
from lyapwander.parameters import limit_exponents
from lyapwander.verify import oracle_points, oracle_suite

R2 = 2 ** -0.5


def product_oracle(m0, n, alpha, beta, p):
    """log ||DF^n v|| by multiplying diagonal / swap matrices at 60 digits."""
    with mpmath.workdps(60):
        l1, l2 = mpmath.exp(mpmath.mpf(p.eps1)), mpmath.exp(mpmath.mpf(p.eps2))
        D = mpmath.matrix([[l1, 0], [0, l2]])
        S = mpmath.matrix([[0, l2], [l1, 0]])
        v = mpmath.matrix([mpmath.mpf(alpha), mpmath.mpf(beta)])
        block, left = 0, p.gamma**m0
        for _ in range(n):
            left -= 1
            if left == 0:
                v = S * v
                block += 1
                left = p.gamma ** (m0 + block)
            else:
                v = D * v
        return float(mpmath.log(mpmath.norm(v)))


def test_36_step_example(ref):
    val = cocycle_lognorm(2, 36, R2, R2, ref)
    closed = float(0.5 * mpmath.log(0.5 * mpmath.exp(mpmath.mpf("1.53")) + 0.5 * mpmath.exp(mpmath.mpf("1.71"))))
    assert val == pytest.approx(closed, abs=1e-12)
    assert val == pytest.approx(product_oracle(2, 36, R2, R2, ref), abs=1e-12)
    assert val == pytest.approx(0.8120222721404184, abs=1e-12)


@pytest.mark.parametrize("n", [1, 8, 9, 10, 35, 36, 37, 117, 200, 400])
@pytest.mark.parametrize("vec", [(R2, R2), (1.0, 0.0), (0.6, -0.8)])
def test_itinerary_against_matrix_product(ref, n, vec):
    assert cocycle_lognorm(2, n, *vec, ref) == pytest.approx(product_oracle(2, n, *vec, ref), abs=1e-12)
    w = cocycle_vector(2, n, *vec, ref)
    assert math.log(np.hypot(*w)) == pytest.approx(product_oracle(2, n, *vec, ref), rel=1e-12)


def test_first_block_pure_stretch(ref):
    for n in range(1, 9):
        assert cocycle_lognorm(2, n, 1.0, 0.0, ref) == pytest.approx(n * 0.025, abs=1e-14)
        assert cocycle_lognorm(2, n, 0.0, 1.0, ref) == pytest.approx(n * 0.02, abs=1e-14)


def test_block_itinerary():
    it = BlockItinerary(2, 3)
    assert [it.block_start(j) for j in range(4)] == [0, 9, 36, 117]
    assert it.locate(36) == (2, 0)
    assert it.slot_counts(36) == (9, 27)
    with pytest.raises(StepOverflow):
        it.slot_counts(1 << 63)


def test_oracle_equivalence(ref):
    res = oracle_suite(ref)
    assert res.passed >= 50 and res.ok, res.failures[:3]
    assert len(oracle_points(ref)) >= 50


def test_closed_form_limits(ref):
    # (0,1): log c vanishes on the first branch and is linear in k on the second
    m, n = 2, 1
    G, u = 3 ** (m + 2 * n), u_mn(m, n, 3)
    ratio = ref.eps2 - ref.eps1
    for k in (0, 10, u):
        assert log_c_coeff(n, k, 0.0, 1.0, m, 3, ref.lam1, ref.lam2) == pytest.approx(0.0, abs=1e-15)
    for k in (u + 1, G):
        assert log_c_coeff(n, k, 0.0, 1.0, m, 3, ref.lam1, ref.lam2) == pytest.approx(2 * ratio * (k - u), rel=1e-12)
    with pytest.raises(ValueError):
        closed_form_lognorm(m, n, G + 1, R2, R2, ref)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.integers(1, 3), st.integers(1, 3))
def test_c_coeff_properties(ref, a, b, m, n):
    u = u_mn(m, n, 3)
    G = 3 ** (m + 2 * n)
    assert c_coeff(n, u, a, b, m, 3, ref.lam1, ref.lam2) == pytest.approx(a * a + b * b, rel=1e-12)
    k = np.linspace(0, G, 101)
    lc = np.abs(log_c_coeff(n, k, a, b, m, 3, ref.lam1, ref.lam2))
    bound = max(math.log(a * a + b * b), -2 * math.log(a), -2 * math.log(b))
    assert np.all(lc <= bound + 1e-12)


def test_c_coeff_top_end(ref):
    m, n = 2, 1
    G, u = 3 ** (m + 2 * n), u_mn(m, n, 3)
    expect = 1 + (ref.lam2 / ref.lam1) ** (2 * (G - u))
    assert c_coeff(n, G, 1.0, 1.0, m, 3, ref.lam1, ref.lam2) == pytest.approx(expect, rel=1e-14)


def test_phi_identities(ref):
    lim = limit_exponents(ref)
    for m, n in ((2, 1), (2, 2), (3, 3)):
        G, u, Gm = 3 ** (m + 2 * n), u_mn(m, n, 3), 3**m
        assert phi(n, 0, m, ref) == pytest.approx(lim.xi0, abs=1e-12)
        assert phi(n, G - Gm, m, ref) == pytest.approx(lim.xi0, abs=1e-12)
        assert phi(n, u, m, ref) == pytest.approx(0.5 * (ref.eps1 + ref.eps2), abs=1e-12)
        assert phi(n, 0, m, ref, branch=2) == pytest.approx(lim.xi1, abs=1e-12)
        assert phi(n, G - Gm, m, ref, branch=1) == pytest.approx(lim.xi1, abs=1e-12)
    assert phi(1, 0, 2, ref) == pytest.approx(0.02375, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_phi_monotone(ref, n):
    m = 2
    u, G = u_mn(m, n, 3), 3 ** (m + 2 * n)
    left = phi(n, np.linspace(0, u, 10_000), m, ref)
    right = phi(n, np.linspace(u, G, 10_000), m, ref)
    assert np.all(np.diff(left) < 0) and np.all(np.diff(right) > 0)


def test_phi_gradient_ratio(ref):
    m = 2
    g = []
    for n in range(1, 5):
        t = np.linspace(0, 3 ** (m + 2 * n), 10_000)
        g.append(np.max(np.abs(phi_derivative(n, t, m, ref))))
    ratios = [g[i] / g[i - 1] for i in range(1, 4)]
    assert all(r <= (1 / 9) * 1.1 for r in ratios), ratios


def test_trace_bounds_and_alignment(ref):
    tr = exponent_trace(2, 2000, R2, R2, ref)
    assert np.all(tr.a >= ref.eps2 - 1e-12) and np.all(tr.a <= ref.eps1 + 1e-12)
    for n in (1, 2):
        T = 9 * (3 ** (2 * n) - 1) // 2
        assert tr.a[T - 1] * T == pytest.approx(closed_form_lognorm(2, n, 0, R2, R2, ref), rel=1e-12)
    assert set(np.unique(tr.tag)) <= {0, 1, 2}
    assert tr.epoch[0] == 2 and tr.phase[8] == 9 and tr.phase[9] == 1


def test_shift_robustness(ref):
    m0, N = 4, 20000
    G = 3**m0
    a = exponent_trace(m0, N, R2, R2, ref).a
    b = exponent_trace(m0 + 1, N, R2, R2, ref).a
    n = np.arange(G + 1, N + 1)
    assert np.all(np.abs(a[n - 1] - b[n - G - 1]) <= G * ref.eps1 / n)


def test_omega_window(ref):
    tr = exponent_trace(4, blocks_total(4, 6, 3), R2, R2, ref)
    est = omega_interval_estimate(tr)
    assert est.lo <= est.hi
    assert ref.eps2 <= est.lo and est.hi <= ref.eps1
    assert len(est.blocks) == 6
    assert est.window == (blocks_total(4, 4, 3) + 1, blocks_total(4, 6, 3))
    with pytest.raises(WindowTooShort):
        omega_interval_estimate(exponent_trace(4, 500, R2, R2, ref))
    with pytest.raises(ValueError):
        omega_interval_estimate(tr, 0.0)
