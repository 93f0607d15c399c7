import numpy as np
import pytest

hyp = pytest.importorskip("hypothesis")
from hypothesis import given, settings, strategies as st

from conftest import dense_population_kernel
from etk import assemble_K, make_system, rate_resolutions
from etk.cfkernel import kernel_at

systems = st.builds(
    make_system,
    e0=st.floats(-6, 6),
    lam=st.floats(0.1, 6),
    v=st.floats(-2, 2),
    temperature=st.floats(200, 400),
    tau_l=st.floats(1e-3, 100),
)


@settings(max_examples=60, deadline=None)
@given(systems, st.floats(0.05, 5), st.integers(0, 12))
def test_truncated_kernel_matches_dense_resolvent(sys, s, depth):
    # s bounded away from 0, where the dense resolvent is singular
    ref = dense_population_kernel(sys, depth + 1, s)
    got = assemble_K(s, kernel_at(s, depth, sys), sys)
    np.testing.assert_allclose(got, ref, rtol=1e-7, atol=1e-9 * max(1.0, np.abs(ref).max()))


@settings(max_examples=100, deadline=None)
@given(systems, st.floats(0, 5))
def test_population_conservation_and_closed_form(sys, s):
    kern = kernel_at(s, 64, sys)
    K = assemble_K(s, kern, sys)
    assert abs(K[0, 0] + K[1, 0]) <= 1e-12 * max(1.0, abs(K[0, 0]))
    pair = rate_resolutions(s, kern, sys)
    assert -K[0, 0].real == pytest.approx(pair.forward, rel=1e-10, abs=1e-300)
    assert K[0, 1].real == pytest.approx(pair.backward, rel=1e-10, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(systems)
def test_rates_even_in_coupling_sign(sys):
    a = rate_resolutions(0.0, kernel_at(0.0, 64, sys), sys)
    flipped = sys.replace(v=-sys.v)
    b = rate_resolutions(0.0, kernel_at(0.0, 64, flipped), flipped)
    assert b.forward == pytest.approx(a.forward, rel=1e-10, abs=1e-300)
    assert b.backward == pytest.approx(a.backward, rel=1e-10, abs=1e-300)
