import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lyapwander.logreal import ONE, ZERO, LogReal, log_diff, log_sub_arrays, logsumexp

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).filter(lambda x: x != 0.0)
logs = st.floats(min_value=-700, max_value=700)


def test_zero_normalisation():
    assert LogReal(1, float("-inf")) == ZERO
    assert LogReal(0, 3.0).is_zero
    with pytest.raises(ValueError):
        LogReal(2, 0.0)
    with pytest.raises(ValueError):
        LogReal(1, float("nan"))


@given(logs)
def test_round_trip(lm):
    x = float(LogReal.exp(lm))
    back = LogReal.from_float(x).logmag
    assert abs(back - lm) <= 4e-16 * (1.0 + abs(lm))


@given(finite, finite)
def test_arithmetic_matches_float(a, b):
    A, B = LogReal.from_float(a), LogReal.from_float(b)
    assert math.isclose(float(A * B), a * b, rel_tol=1e-12)
    assert math.isclose(float(A / B), a / b, rel_tol=1e-12)
    s = a + b
    assert math.isclose(float(A + B), s, rel_tol=1e-9, abs_tol=1e-9 * max(abs(a), abs(b)))


@given(finite, finite)
def test_ordering_matches_float(a, b):
    A, B = LogReal.from_float(a), LogReal.from_float(b)
    assert (A < B) == (a < b)
    assert (A >= B) == (a >= b)


def test_far_below_underflow():
    tiny = LogReal.exp(-1e5)
    assert float(tiny) == 0.0
    assert tiny > ZERO
    assert (tiny + tiny).logmag == pytest.approx(-1e5 + math.log(2.0), abs=1e-12)
    assert tiny - tiny == ZERO
    assert (ONE - LogReal.exp(-1e-20)).logmag == pytest.approx(math.log(1e-20), rel=1e-12)


def test_log_helpers():
    assert logsumexp([]) == float("-inf")
    assert logsumexp([0.0, 0.0]) == pytest.approx(math.log(2.0))
    assert log_diff(0.0, math.log(0.5)) == pytest.approx(math.log(0.5))
    with pytest.raises(ValueError):
        log_diff(0.0, 1.0)
    out = log_sub_arrays(np.array([0.0, 0.0]), np.array([-1.0, 1.0]))
    assert out[0] == pytest.approx(math.log(1 - math.exp(-1.0)))
    assert np.isnan(out[1])
