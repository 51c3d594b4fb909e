import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapwander import kernels
from lyapwander.errors import BoundaryHit, OutsideDomain
from lyapwander.logreal import LogReal
from lyapwander.planar_map import (PlanarPoint, ProfilePair, Region, apply_map, apply_map_float,
                                   classify, jacobian, smoothstep, smoothstep_deriv)
from lyapwander.spectrum import sigma_family
from lyapwander.wandering import rectangle


@pytest.fixture(scope="module")
def prof(ref, tab):
    return ProfilePair(ref, tab)


@pytest.mark.parametrize("r", [1, 2, 3, 5])
def test_smoothstep(r):
    assert smoothstep(0.0, r) == 0.0
    assert smoothstep(1.0, r) == pytest.approx(1.0, abs=1e-14)
    assert smoothstep(0.5, r) == pytest.approx(0.5, abs=1e-14)
    t = np.linspace(0.01, 0.99, 99)
    h = 1e-6
    fd = (smoothstep(t + h, r) - smoothstep(t - h, r)) / (2 * h)
    assert np.allclose(fd, smoothstep_deriv(t, r), atol=1e-6)
    assert np.all(np.diff(smoothstep(t, r)) > 0)


def test_profile_zero_on_inactive_collars(prof, ref):
    for k in (1, 5, ref.gamma**ref.M):
        x = LogReal.exp(-ref.eps1 * k + 1e-4)
        v = prof(x)
        assert v.f.is_zero and v.eta.is_zero


def test_profile_plateau_matches_rectangle(prof, tab, ref):
    # R(gamma^m - k, m) sits on the plateau J_k, so eta is constant across it (active k > gamma^M)
    for m in (ref.M + 1, ref.M + 2):
        G = tab.G(m)
        for k in (G // 3 + 1, G // 2, G - 1, G):
            R = rectangle(G - k, m, tab)
            lo, hi = R.x_interval
            for lx in np.linspace(lo, hi, 5):
                v = prof(LogReal.exp(lx))
                assert v.part == "plateau" and v.k == k
                assert v.eta.logmag == pytest.approx(R.H.logmag - math.log(2), abs=1e-12)
                assert v.f == R.B + R.H * 0.5


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-18.0, max_value=-0.03))
def test_eta_below_f(prof, lx):
    v = prof(LogReal.exp(lx))
    assert v.eta <= v.f


def test_profile_continuous_at_collar_edges(prof, ref):
    k = ref.gamma**ref.M + 7
    ok = prof.plateau_logs(k)
    d, dn = prof.d, prof.d_next
    for xi, expect_zero in ((1 - dn, True), (1 + 2 * d + dn, True), (1.0, False), (1 + 2 * d, False)):
        v = prof(LogReal.exp(math.log(xi) - ref.eps1 * k))
        if expect_zero:
            assert v.f.is_zero or v.f.logmag < ok[0] - 30
        else:
            assert v.f.logmag == pytest.approx(ok[0], abs=1e-12)


def test_classify_regions(ref):
    cases = {(0.5, 0.5): Region.D0_PLUS, (0.5, -0.5): Region.D0_MINUS, (0.99, 0.5): Region.D1_PLUS,
             (0.99, -0.5): Region.D1_MINUS, (0.5, 0.995): Region.D2_PLUS, (0.99, -0.995): Region.D3_MINUS}
    for (x, y), reg in cases.items():
        assert classify(PlanarPoint.from_floats(x, y), None, ref) is reg
    with pytest.raises(BoundaryHit):
        apply_map(PlanarPoint(LogReal.exp(-ref.eps1), LogReal.from_float(0.3)), None, ref)
    with pytest.raises(OutsideDomain):
        apply_map(PlanarPoint.from_floats(1.5, 0.0), None, ref)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.001, 0.999), st.floats(-0.999, 0.999))
def test_log_and_float_maps_agree(ref, x, y):
    try:
        fx, fy = apply_map_float(x, y, None, ref)
    except (BoundaryHit, OutsideDomain):
        return
    img = apply_map(PlanarPoint.from_floats(x, y), None, ref)
    gx, gy = img.to_floats()
    assert gx == pytest.approx(fx, rel=1e-9, abs=1e-12)
    assert gy == pytest.approx(fy, rel=1e-9, abs=1e-12)


def test_jacobian_against_finite_differences(ref, prof):
    pts = [(0.5, 0.3), (0.99, 0.4), (0.99, -0.4), (0.5, 0.99), (0.3, -0.2)]
    h = 1e-7
    for x, y in pts:
        J = jacobian(PlanarPoint.from_floats(x, y), prof, ref)
        col = []
        for dx, dy in ((h, 0), (0, h)):
            a = np.array(apply_map_float(x + dx, y + dy, prof, ref))
            b = np.array(apply_map_float(x - dx, y - dy, prof, ref))
            col.append((a - b) / (2 * h))
        assert np.allclose(np.column_stack(col), J, atol=1e-6)
    assert np.all(np.abs(np.linalg.eigvals(jacobian(PlanarPoint.from_floats(0.5, 0.3), None, ref))) > 1)


def test_kernel_iteration_matches_python_map(ref, prof):
    sysm = sigma_family(ref, prof)
    rng = np.random.default_rng(3)
    x = rng.uniform(0.01, 0.99, 400)
    y = rng.uniform(-0.99, 0.99, 400)
    xo, yo, st_ = sysm.iterate(x, y, 1)
    for i in range(x.size):
        if st_[i] != kernels.OK:
            continue
        fx, fy = apply_map_float(x[i], y[i], prof, ref)
        assert xo[i] == pytest.approx(fx, rel=1e-12)
        assert yo[i] == pytest.approx(fy, rel=1e-12, abs=1e-300)
