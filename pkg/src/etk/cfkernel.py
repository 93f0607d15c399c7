"""Laplace-domain memory kernel by inward continued-fraction recursion.

For the Debye bath only three complex elements of the level-n kernel are
independent::

    x = Pi_{ba,ba},   y = Pi_{ba,ab},   z = Pi_{ba,bb}

(the rest are their conjugate partners), and likewise X, Y, Z for the
level-n Green's function.  Level n+1 Green's elements at argument s + gamma
give the level-n kernel at s; the Green's elements themselves follow from the
kernel in closed form through a 2x2 Dyson reduction.  Truncating with a zero
kernel at level N+1 and walking inward gives the level-0 kernel.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .core import HBAR, EtSystem, eta
from .errors import (ArgumentError, ConvergenceError, LevelMismatchError,
                     SingularGreenError)
from .kernels import SINGULAR_TOL, cf_level0

DEPTH_START = 4
DEPTH_MAX = 4096
ABS_FLOOR = 1e-14
_IDENTITY_TOL = 1e-8


@dataclass(frozen=True)
class KernelElements:
    x: complex
    y: complex
    z: complex
    level: int
    s_arg: complex
    # x + y as carried by the recursion; deep slow-solvent kernels have
    # x ~ -y, and re-adding the rounded elements would lose most digits
    xy: complex | None = None

    def as_tuple(self):
        return (self.x, self.y, self.z)

    @property
    def sum_xy(self) -> complex:
        return self.x + self.y if self.xy is None else self.xy


@dataclass(frozen=True)
class GreenElements:
    X: complex
    Y: complex
    Z: complex
    level: int
    s_arg: complex


def zero_kernel(level: int, s_arg: complex) -> KernelElements:
    return KernelElements(0j, 0j, 0j, level, complex(s_arg))


def _same_arg(a, b):
    return cmath.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


def _alpha_beta(s_arg, kern, sys):
    alpha = s_arg + 1j * (sys.e0 + sys.lam) / HBAR + kern.x
    # (V/hbar)**2 (2 + i hbar z / V), rewritten to stay finite at V = 0
    vh = sys.v / HBAR
    beta = vh * (2.0 * vh + 1j * kern.z) / s_arg
    return alpha, beta


def green_from_kernel(s_arg, kern: KernelElements, sys: EtSystem) -> GreenElements:
    """Closed-form Green's-function elements from the kernel at the same level."""
    s_arg = complex(s_arg)
    if s_arg == 0:
        raise ArgumentError("Green's function elements are undefined at s = 0")
    if not _same_arg(kern.s_arg, s_arg):
        raise LevelMismatchError(
            f"kernel evaluated at s={kern.s_arg}, Green's function requested at s={s_arg}")
    alpha, beta = _alpha_beta(s_arg, kern, sys)
    ab = alpha + beta
    bmy = beta - kern.y
    # same algebra as the batch recursion: u = ab - bmy, w = ab + bmy,
    # |ab|^2 - |bmy|^2 = Re(w conj u) without cancellation
    u = s_arg + 1j * (sys.e0 + sys.lam) / HBAR + kern.sum_xy
    w = ab + bmy
    den = (w * u.conjugate()).real
    if abs(den) < SINGULAR_TOL:
        raise SingularGreenError("resonant denominator |alpha+beta|^2 == |beta-y|^2",
                                 level=kern.level)
    big_x = ab.conjugate() / den
    big_y = bmy / den
    vh = sys.v / HBAR
    num = complex((kern.z * w.conjugate()).real - vh * w.imag,
                  (kern.z * u.conjugate()).imag - vh * u.real)
    big_z = -num / (den * s_arg)
    # first row of [[a, b], [conj b, conj a]] times its inverse's first column
    check = ab * big_x - bmy.conjugate() * big_y
    if not cmath.isclose(check, 1.0, rel_tol=_IDENTITY_TOL):
        raise SingularGreenError(
            f"2x2 inversion lost precision (identity residual {abs(check - 1):.3e})",
            level=kern.level)
    return GreenElements(big_x, big_y, big_z, kern.level, s_arg)


def descend(green_np1: GreenElements, n: int, sys: EtSystem) -> KernelElements:
    """Level-n kernel at s from level-(n+1) Green's elements at s + gamma."""
    if n < 0:
        raise LevelMismatchError(f"level must be >= 0, got {n}")
    if green_np1.level != n + 1:
        raise LevelMismatchError(
            f"expected Green's elements at level {n + 1}, got level {green_np1.level}")
    e = eta(sys)
    m = n + 1
    s = green_np1.s_arg - sys.gamma
    return KernelElements(
        x=e * m * green_np1.X,
        y=-e.conjugate() * m * green_np1.Y,
        z=(e - e.conjugate()) * m * green_np1.Z,
        level=n,
        s_arg=s,
    )


def kernel_at_stepwise(s, depth: int, sys: EtSystem) -> KernelElements:
    """Reference recursion built from green_from_kernel and descend.

    Same result as ``kernel_at`` but through the typed per-level operations;
    slow, used for cross-checks.
    """
    if depth < 0:
        raise ArgumentError(f"depth must be >= 0, got {depth}")
    s = complex(s)
    kern = zero_kernel(depth + 1, s + (depth + 1) * sys.gamma)
    for n in range(depth + 1, 0, -1):
        green = green_from_kernel(s + n * sys.gamma, kern, sys)
        kern = descend(green, n - 1, sys)
    return kern


def _check_args(s, sys):
    s = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    if np.any(s.real < 0):
        raise ArgumentError("Laplace argument must have Re(s) >= 0")
    return s


def _kernel_arrays(s, depth, sys):
    if depth < 0:
        raise ArgumentError(f"depth must be >= 0, got {depth}")
    s = _check_args(s, sys)
    e = eta(sys)
    x, y, z, p, bad = cf_level0(s, int(depth), (sys.e0 + sys.lam) / HBAR, sys.v / HBAR,
                                e.real, e.imag, sys.gamma)
    if np.any(bad >= 0):
        i = int(np.argmax(bad >= 0))
        raise SingularGreenError(f"resonant denominator at s={s[i]}", level=int(bad[i]))
    return x, y, z, p


def kernel_batch(s, depth: int, sys: EtSystem):
    """Level-0 (x, y, z) arrays for an array of Laplace arguments."""
    return _kernel_arrays(s, depth, sys)[:3]


def kernel_at(s, depth: int, sys: EtSystem) -> KernelElements:
    """Level-0 kernel elements at ``s`` with the hierarchy truncated at ``depth``."""
    x, y, z, p = _kernel_arrays([s], depth, sys)
    return KernelElements(complex(x[0]), complex(y[0]), complex(z[0]), 0, complex(s),
                          complex(p[0]))


def _close(a, b, rel_tol):
    diff = abs(a - b)
    if abs(b) < ABS_FLOOR:
        return diff < ABS_FLOOR
    return diff <= rel_tol * abs(b)


def kernel_converged(s, sys: EtSystem, rel_tol: float = 1e-10,
                     depth_max: int = DEPTH_MAX):
    """Double the depth from 4 until x, y, z settle; return ``(kern, depth)``."""
    if rel_tol <= 0:
        raise ArgumentError("rel_tol must be positive")
    depth = DEPTH_START
    prev = cur = kernel_at(s, depth, sys)
    while depth < depth_max:
        depth = min(2 * depth, depth_max)
        cur = kernel_at(s, depth, sys)
        if all(_close(a, b, rel_tol) for a, b in zip(prev.as_tuple(), cur.as_tuple())):
            return cur, depth
        prev = cur
    raise ConvergenceError(
        f"kernel not converged to rel_tol={rel_tol} at depth {depth_max}",
        previous=prev, last=cur)
