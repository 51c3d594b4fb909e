import json
import math

import pytest

from lyapwander.errors import BoundViolation, NotFound
from lyapwander.parameters import (eps1_bound, find_min_epoch, limit_exponents, load_params,
                                   params_from_sigma, save_params, validate_params)
from lyapwander.sequences import STATED_CHECKS, WANDERING_CHECKS


def test_reference_values(ref):
    assert ref.sigma == pytest.approx(0.2, abs=1e-15)
    assert ref.lam1 == math.exp(0.025)
    assert ref.M == 3
    lim = limit_exponents(ref)
    assert lim.xi0 == pytest.approx(0.02375, abs=1e-15)
    assert lim.xi1 == pytest.approx(0.02125, abs=1e-15)
    assert lim.mean == pytest.approx(0.0225, abs=1e-15)
    assert lim.rho == pytest.approx(0.00625, abs=1e-15)
    assert lim.interval_A1 == (lim.mean, lim.xi0)


def test_eps1_bound():
    assert eps1_bound(1, 3) == pytest.approx(0.025672117, abs=1e-9)
    assert eps1_bound(2, 5) == pytest.approx(2.25 * math.log(2) / 125)


@pytest.mark.parametrize("args, which", [
    ((1, 3, 0.02, 0.025), "eps2<eps1"),
    ((1, 3, 0.03, 0.02), "eps1 bound"),
    ((3, 3, 0.001, 0.0005), "gamma>r"),
    ((0, 3, 0.02, 0.01), "r>=1"),
    ((1, 3, 0.02, 0.0), "eps2>0"),
    ((1.5, 3, 0.02, 0.01), "integrality"),
])
def test_violations(args, which):
    with pytest.raises(BoundViolation) as ei:
        validate_params(*args)
    assert ei.value.which == which


def test_sigma_construction():
    p = params_from_sigma(0.2)
    assert p.eps2 == pytest.approx(0.02)
    with pytest.raises(BoundViolation):
        params_from_sigma(1.0)


def test_stated_inequalities_fail_at_reference(ref):
    with pytest.raises(NotFound) as ei:
        find_min_epoch(ref, checks=STATED_CHECKS)
    names = {c.name for c in ei.value.failures}
    assert {"W_bound", "H_below_B"} <= names


def test_stated_inequalities_pass_for_smaller_eps():
    p = validate_params(1, 3, 0.012, 0.0096)
    assert find_min_epoch(p, checks=STATED_CHECKS) == 3
    assert find_min_epoch(p, checks=WANDERING_CHECKS) >= 1


def test_explicit_epoch():
    assert validate_params(1, 3, 0.025, 0.02, M=5).M == 5
    with pytest.raises(BoundViolation):
        validate_params(1, 3, 0.025, 0.02, M=0)


def test_config_round_trip(tmp_path, ref):
    path = tmp_path / "p.json"
    save_params(ref, path)
    assert json.loads(path.read_text()) == {"r": 1, "gamma": 3, "eps1": 0.025, "eps2": 0.02}
    assert load_params(path) == ref
    path.write_text('{"r": 1}')
    with pytest.raises(KeyError):
        load_params(path)
