import math

import numpy as np
import pytest

from conftest import dense_population_kernel
from etk import (HBAR, KB, ArgumentError, assemble_K, make_system, marcus_rate,
                 rate_constants, rate_resolutions)
from etk.cfkernel import kernel_at
from etk.rates import rate_at


def test_reference_regression(ref_sys):
    pair = rate_constants(ref_sys)
    assert pair.forward == pytest.approx(1.4304196213931, rel=1e-10)
    assert pair.backward == pytest.approx(0.4183926039946, rel=1e-10)
    assert pair.n_used == 512 and pair.validity_flag


def test_zero_coupling():
    sys = make_system(-3, 3, 0.0, 298, 1)
    pair = rate_constants(sys)
    assert pair.forward == 0.0 and pair.backward == 0.0
    assert not np.any(assemble_K(0.0, kernel_at(0.0, 20, sys), sys))


def test_symmetric_system():
    pair = rate_constants(make_system(0.0, 3.0, 1.0, 298.0, 0.0165))
    assert pair.forward == pytest.approx(pair.backward, rel=1e-6)


def test_marcus_formula(weak):
    kt = KB * 298
    ref = (1e-4 / HBAR) / math.sqrt(3 * kt / math.pi)
    assert marcus_rate(weak) == pytest.approx(ref, rel=1e-14)
    assert marcus_rate(weak) == pytest.approx(1.024e-3, rel=1e-3)


def test_weak_point_is_marcus(weak):
    pair = rate_constants(weak)
    assert pair.forward == pytest.approx(marcus_rate(weak), rel=0.02)


def test_detailed_balance_near_marcus(weak):
    pair = rate_constants(weak)
    dg = -weak.kt * math.log(pair.forward / pair.backward)
    assert dg == pytest.approx(-3.0, abs=0.01)


def test_assemble_K_contract(ref_sys):
    kern = kernel_at(0.0, 512, ref_sys)
    pair = rate_resolutions(0.0, kern, ref_sys)
    K = assemble_K(0.0, kern, ref_sys)
    assert -K[0, 0].real == pytest.approx(pair.forward, rel=1e-10)
    assert K[0, 1].real == pytest.approx(pair.backward, rel=1e-10)
    assert abs(K[0, 0] + K[1, 0]) < 1e-12 and abs(K[0, 1] + K[1, 1]) < 1e-12


@pytest.mark.parametrize("s", [0.4, 3.0])
def test_resolutions_match_dense_resolvent(ref_sys, s):
    ref = dense_population_kernel(ref_sys, 21, s)
    pair = rate_resolutions(s, kernel_at(s, 20, ref_sys), ref_sys)
    assert pair.forward == pytest.approx(-ref[0, 0].real, rel=1e-8)
    assert pair.backward == pytest.approx(ref[0, 1].real, rel=1e-8)


def test_kernel_argument_must_match(ref_sys):
    with pytest.raises(ArgumentError):
        rate_resolutions(0.5, kernel_at(0.0, 8, ref_sys), ref_sys)


def test_energy_units_scaling():
    # doubling every energy and temperature, and halving tau_l, doubles every rate
    a = make_system(-3, 3, 1, 298, 1.0)
    b = make_system(-6, 6, 2, 596, 0.5)
    ra, rb = rate_constants(a, 1e-12), rate_constants(b, 1e-12)
    assert rb.forward == pytest.approx(2 * ra.forward, rel=1e-8)
    assert rb.backward == pytest.approx(2 * ra.backward, rel=1e-8)


def test_v_squared_scaling_weak_coupling(weak):
    # golden-rule regime: k scales as V**2 once V is small enough
    k3 = rate_constants(weak.replace(v=1e-3)).forward
    k4 = rate_constants(weak.replace(v=1e-4)).forward
    assert k4 == pytest.approx(k3 / 100, rel=1e-3)


def test_tiny_reorganization_energy_finite():
    pair = rate_constants(make_system(-1.0, 1e-6, 0.01, 298.0, 1.0))
    assert math.isfinite(pair.forward) and pair.forward >= 0


def test_rates_accurate_when_x_cancels_y():
    # x ~ -y here; both routes must use the accurate x + y from the recursion.
    # Reference values from a 60-digit mpmath recursion at the same depth.
    sys = make_system(1.0, 1.0, 2.0, 200.0, 35.0)
    for s, ref in ((0.0, 0.013950789060425007), (1e-12, 0.013950789063753239)):
        kern = kernel_at(s, 64, sys)
        assert rate_resolutions(s, kern, sys).forward == pytest.approx(ref, rel=1e-13)
        assert -assemble_K(s, kern, sys)[0, 0].real == pytest.approx(ref, rel=1e-13)
