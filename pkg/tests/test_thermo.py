import math

import pytest

from etk import (KB, ArgumentError, NonpositiveRateError, entropy_enthalpy, gibbs,
                 kappa, make_system, tau_for_kappa)
from etk.thermo import gibbs_from_rates


def test_gibbs_from_rates():
    assert gibbs_from_rates(2.0, 1.0, 300.0) == pytest.approx(-KB * 300 * math.log(2))
    with pytest.raises(NonpositiveRateError) as info:
        gibbs_from_rates(1.0, 0.0, 300.0)
    assert (info.value.forward, info.value.backward) == (1.0, 0.0)


def test_symmetric_zero(ref_sys):
    assert abs(gibbs(ref_sys.replace(e0=0.0))) < 1e-6
    res = entropy_enthalpy(ref_sys.replace(e0=0.0))
    assert abs(res.ds) < 1e-6 and abs(res.dh) < 1e-6


def test_antisymmetry(ref_sys):
    assert gibbs(ref_sys.replace(e0=3.0)) == pytest.approx(-gibbs(ref_sys), abs=1e-6)


def test_reference_ordering(ref_sys):
    res = entropy_enthalpy(ref_sys)
    assert res.dg < 0 and res.dh < 0
    assert abs(res.dh) >= abs(res.dg) >= 3.0
    assert res.dh == pytest.approx(res.dg + 298 * res.ds, rel=1e-14)


def test_temperature_step_robust(ref_sys):
    a = entropy_enthalpy(ref_sys, delta_t=0.5).ds
    b = entropy_enthalpy(ref_sys, delta_t=2.0).ds
    assert a == pytest.approx(b, rel=0.01)


def test_weak_coupling_is_ideal(weak):
    # golden-rule detailed balance gives dG -> E0 as V -> 0
    assert gibbs(weak.replace(v=1e-4)) == pytest.approx(-3.0, abs=1e-3)


def test_bad_temperature_step(ref_sys):
    with pytest.raises(ArgumentError):
        entropy_enthalpy(ref_sys, delta_t=0.0)
    with pytest.raises(ArgumentError):
        entropy_enthalpy(ref_sys.replace(temperature=1.0), delta_t=1.0)


def test_kappa_values():
    assert kappa(make_system(0, 3, 1, 298, 10)) == pytest.approx(1.65e-3, rel=0.01)
    tau = tau_for_kappa(3.0, 298.0)
    assert tau == pytest.approx(0.0165, rel=0.01)
    assert kappa(make_system(0, 3, 1, 298, tau)) == pytest.approx(1.0, rel=1e-14)
