"""Forward/backward rate resolutions from the level-0 memory kernel."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cfkernel import KernelElements, _same_arg, kernel_converged
from .core import HBAR, EtSystem, semiclassical_validity
from .errors import ArgumentError, SingularDenominatorError

_SINGULAR_TOL = 1e-300


@dataclass(frozen=True)
class RatePair:
    forward: float
    backward: float
    s_arg: float
    n_used: int
    validity_flag: bool


def _alpha(s, kern, sys):
    return s + 1j * (sys.e0 + sys.lam) / HBAR + kern.x


def rate_resolutions(s, kern: KernelElements, sys: EtSystem, n_used: int = 0) -> RatePair:
    """k(s) and k'(s) from the closed-form expressions in x, y, z.

    The backward rate is evaluated as
    ``Re[(alpha + y)(2 V**2 - 2 i hbar V conj(z))] / (hbar**2 (|alpha|**2 - |y|**2))``
    which is the usual form multiplied through by V, so V = 0 is safe.
    """
    s = float(s)
    if s < 0:
        raise ArgumentError("rate resolutions are defined for real s >= 0")
    if kern.level != 0 or not _same_arg(kern.s_arg, s):
        raise ArgumentError("kernel must be the level-0 kernel evaluated at s")
    alpha = _alpha(s, kern, sys)
    ay = s + 1j * (sys.e0 + sys.lam) / HBAR + kern.sum_xy
    # |alpha|^2 - |y|^2 without the cancellation of two large squares
    den = (ay * (alpha - kern.y).conjugate()).real
    if abs(den) < _SINGULAR_TOL:
        raise SingularDenominatorError("|alpha|^2 == |y|^2 in rate expression")
    v = sys.v
    forward = (2.0 * v * v / HBAR**2) * (ay / den).real
    backward = (ay * (2.0 * v * v - 2j * HBAR * v * kern.z.conjugate())).real / (HBAR**2 * den)
    valid, _ = semiclassical_validity(sys)
    return RatePair(float(forward), float(backward), s, int(n_used), valid)


def rate_constants(sys: EtSystem, rel_tol: float = 1e-10) -> RatePair:
    """Converged rate constants k = k(0), k' = k'(0)."""
    kern, n_used = kernel_converged(0.0, sys, rel_tol)
    return rate_resolutions(0.0, kern, sys, n_used)


def rate_at(s, sys: EtSystem, rel_tol: float = 1e-10) -> RatePair:
    kern, n_used = kernel_converged(s, sys, rel_tol)
    return rate_resolutions(s, kern, sys, n_used)


def assemble_K(s, kern: KernelElements, sys: EtSystem) -> np.ndarray:
    """Population rate matrix K(s) = T_PC (s + T_CC)^-1 T_CP.

    Population order (a, b), coherence order (ab, ba).  Energies enter the
    transfer matrices divided by hbar.
    """
    # The rates are real parts of products whose imaginary parts can be many
    # orders larger, so the tiny 2x2 algebra runs in extended precision.
    ld = np.clongdouble
    x, z = ld(kern.x), ld(kern.z)
    y = ld(kern.sum_xy) - x
    vh = np.longdouble(sys.v) / np.longdouble(HBAR)
    eps = (np.longdouble(sys.e0) + np.longdouble(sys.lam)) / np.longdouble(HBAR)
    i = ld(1j)
    t_pc = i * vh * np.array([[-1, 1], [1, -1]], dtype=ld)
    t_cp = t_pc + np.array([[0, np.conj(z)], [0, z]], dtype=ld)
    t_cc = np.array([[-i * eps + np.conj(x), np.conj(y)], [y, i * eps + x]], dtype=ld)
    m = ld(s) * np.eye(2, dtype=ld) + t_cc
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < _SINGULAR_TOL:
        raise SingularDenominatorError("s + T_CC is not invertible")
    inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=ld) / det
    return (t_pc @ inv @ t_cp).astype(np.complex128)


def marcus_rate(sys: EtSystem) -> float:
    """Nonadiabatic static-solvation (Marcus) rate in 1/ps."""
    lkt = sys.lam * sys.kt
    return (sys.v**2 / HBAR) / math.sqrt(lkt / math.pi) * math.exp(
        -(sys.e0 + sys.lam) ** 2 / (4.0 * lkt))
