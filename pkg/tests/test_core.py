import math

import pytest

from etk import (CONSTANTS, HBAR, KB, EtSystem, ParameterError, eta, make_system,
                 semiclassical_validity)


def test_constants():
    assert HBAR == pytest.approx(0.0635077993)
    assert KB == pytest.approx(0.0083144626)
    assert CONSTANTS.hbar == HBAR


def test_eta_example():
    sys = make_system(-3, 3, 1, 298, 1)
    e = eta(sys)
    assert e.real == pytest.approx(3686.0, rel=2e-4)
    assert e.imag == pytest.approx(-47.24, rel=2e-4)
    assert (e - e.conjugate()).imag == pytest.approx(-2 * 3 / HBAR, rel=1e-12)


def test_gamma_kt():
    sys = make_system(0, 1, 1, 300, 0.5)
    assert sys.gamma == 2.0
    assert sys.kt == pytest.approx(KB * 300)


@pytest.mark.parametrize("temp,ratio,flag", [(298, 1.374, True), (50, 0.231, False)])
def test_validity(temp, ratio, flag):
    ok, r = semiclassical_validity(make_system(-3, 3, 1, temp, 1))
    assert ok is flag
    assert r == pytest.approx(ratio, abs=1e-3)


def test_validity_zero_energy_scale():
    ok, r = semiclassical_validity(make_system(0, 3, 0, 298, 1))
    assert ok and math.isinf(r)


@pytest.mark.parametrize("field,kwargs", [
    ("lambda", dict(lam=0.0)),
    ("temperature", dict(temperature=-1.0)),
    ("tau_l", dict(tau_l=0.0)),
    ("lambda", dict(lam=float("nan"))),
    ("v", dict(v=float("inf"))),
])
def test_invalid(field, kwargs):
    base = dict(e0=0.0, lam=1.0, v=1.0, temperature=300.0, tau_l=1.0)
    base.update(kwargs)
    with pytest.raises(ParameterError) as info:
        EtSystem(**base)
    assert info.value.field == field


def test_replace_accepts_lambda():
    sys = make_system(-3, 3, 1, 298, 1).replace(**{"lambda": 5.0})
    assert sys.lam == 5.0
    assert sys.as_tuple() == (-3.0, 5.0, 1.0, 298.0, 1.0)
