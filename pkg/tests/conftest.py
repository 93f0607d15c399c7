import math

import numpy as np
import pytest

from etk import HBAR, eta, make_system


def _comm(o):
    i2 = np.eye(2)
    return np.kron(o, i2) - np.kron(i2, o.T)


def _anti(o):
    i2 = np.eye(2)
    return np.kron(o, i2) + np.kron(i2, o.T)


def dense_generator(sys, levels, sigma=None):
    """Row-major vectorized hierarchy generator with levels 0..levels.

    With ``sigma`` the auxiliaries are rho_n / (sqrt(n!) sigma**n); ``None``
    gives the raw stack.  The similarity transform leaves the
    level-0 block of the resolvent unchanged but keeps the matrix well scaled.
    """
    h = np.array([[0.0, sys.v], [sys.v, sys.e0 + sys.lam]])
    pb = np.array([[0.0, 0.0], [0.0, 1.0]])
    lio = _comm(h) / HBAR
    a = (2 * sys.lam * sys.kt / HBAR**2) * _comm(pb) - 1j * (sys.lam * sys.gamma / HBAR) * _anti(pb)
    b = _comm(pb)
    dim = 4 * (levels + 1)
    g = np.zeros((dim, dim), dtype=complex)
    for n in range(levels + 1):
        blk = slice(4 * n, 4 * n + 4)
        g[blk, blk] = -1j * lio - n * sys.gamma * np.eye(4)
        if n < levels:
            up = 1.0 if sigma is None else math.sqrt(n + 1) * sigma
            g[blk, 4 * (n + 1):4 * (n + 2)] = -1j * up * b
        if n > 0:
            dn = n if sigma is None else math.sqrt(n) / sigma
            g[blk, 4 * (n - 1):4 * n] = -1j * dn * a
    return g


def dense_population_kernel(sys, levels, s):
    """K(s) from the exact resolvent: p(s) = (s - K(s))^-1 p(0)."""
    g = dense_generator(sys, levels, math.sqrt(abs(eta(sys))))
    r = np.linalg.inv(s * np.eye(g.shape[0]) - g)
    pop = [0, 3]
    gpp = r[np.ix_(pop, pop)]
    return s * np.eye(2) - np.linalg.inv(gpp)


@pytest.fixture
def ref_sys():
    return make_system(-3.0, 3.0, 1.0, 298.0, 1.0)


@pytest.fixture
def weak():
    return make_system(-3.0, 3.0, 0.01, 298.0, 10.0)
