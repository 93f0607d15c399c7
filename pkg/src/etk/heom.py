"""Time-domain hierarchy propagation, used as an oracle for the Laplace engine.

The hierarchy couples rho_0 to auxiliaries rho_n::

    d rho_n/dt = -(i L + n gamma) rho_n - i B rho_{n+1} - i n A rho_{n-1}

with L = [H, .]/hbar, H = (E0 + lambda)|b><b| + V(|a><b| + |b><a|),
A = (2 lambda kT / hbar**2)[|b><b|, .] - i (lambda gamma / hbar){|b><b|, .},
B = [|b><b|, .], and rho_{N+1} = 0.

Raw auxiliaries grow roughly like prod_k sqrt(k |eta|) and overflow double
precision beyond a few dozen levels, so the propagated stack stores
rho_n / (sqrt(n!) sigma**n).  rho_0 is unaffected.  ``sigma=None`` selects the
raw (unnormalized) convention.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import HBAR, EtSystem, eta
from .errors import (ArgumentError, NotEquilibratedError, PoorFitError,
                     StabilityError)
from .kernels import _rk4_flux, _rk4_populations, hierarchy_rhs

TRACE_TOL = 1e-6
MAX_STEPS = 100_000_000
FIT_WINDOW = (1e-5, 1e-1)
FIT_R2_MIN = 0.999
STEADY_TOL = 1e-6


@dataclass
class HierarchyState:
    matrices: np.ndarray
    time: float = 0.0
    sigma: float | None = None

    @property
    def depth(self) -> int:
        return self.matrices.shape[0] - 1

    @property
    def rho(self) -> np.ndarray:
        return self.matrices[0]


@dataclass
class PopulationTrace:
    times: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray
    trace_error_max: float
    hermiticity_error_max: float = 0.0
    trace_errors: np.ndarray = field(default=None, repr=False)
    depth: int = 0
    dt: float = 0.0


@dataclass(frozen=True)
class RateFit:
    k_fit: float
    k_bwd_fit: float
    p_a_inf: float
    total_rate: float
    r_squared: float


def default_sigma(sys: EtSystem) -> float:
    return math.sqrt(abs(eta(sys))) or 1.0


def coupling_factors(depth: int, sigma: float | None):
    """Multipliers of B rho_{n+1} (``up``) and A rho_{n-1} (``dn``) per level."""
    n = np.arange(depth + 1, dtype=float)
    if sigma is None:
        return np.ones(depth + 1), n
    return np.sqrt(n + 1.0) * sigma, np.sqrt(n) / sigma


def initial_state(depth: int, sigma: float | None = None) -> HierarchyState:
    """rho_0 = |a><a|, all auxiliaries zero."""
    if depth < 0:
        raise ArgumentError("depth must be >= 0")
    r = np.zeros((depth + 1, 2, 2), dtype=np.complex128)
    r[0, 0, 0] = 1.0
    return HierarchyState(r, 0.0, sigma)


def _operators(sys: EtSystem):
    h = np.array([[0.0, sys.v], [sys.v, sys.e0 + sys.lam]]) / HBAR
    ca = 2.0 * sys.lam * sys.kt / HBAR**2
    cb = sys.lam * sys.gamma / HBAR
    return h, ca, cb


def hierarchy_derivative(state: HierarchyState, sys: EtSystem) -> HierarchyState:
    """Time derivative of the whole stack, same normalization as ``state``."""
    h, ca, cb = _operators(sys)
    up, dn = coupling_factors(state.depth, state.sigma)
    out = np.empty_like(state.matrices)
    hierarchy_rhs(np.ascontiguousarray(state.matrices), out, h, sys.gamma, up, dn, ca, cb, False)
    return HierarchyState(out, state.time, state.sigma)


def stability_dt(sys: EtSystem) -> float:
    """Upper bound on the step: min(tau_l, hbar / max(|V|, |E0+lambda|, kT)) / 20."""
    scale = max(abs(sys.v), abs(sys.e0 + sys.lam), sys.kt)
    return min(sys.tau_l, HBAR / scale) / 20.0


def default_dt(sys: EtSystem, depth: int) -> float:
    # RK4 stability reaches |dt * lambda_max| ~ 2.8; the stack spectral radius
    # is about 2 sqrt(N |eta|) + N gamma plus the system frequencies.
    radius = (2.0 * math.sqrt(depth * abs(eta(sys))) + depth * sys.gamma
              + (abs(sys.e0 + sys.lam) + 2.0 * abs(sys.v)) / HBAR)
    return min(stability_dt(sys), 2.0 / radius if radius > 0 else math.inf)


def _run(state, sys, dt, n_steps, stride):
    h, ca, cb = _operators(sys)
    up, dn = coupling_factors(state.depth, state.sigma)
    p_a, p_b, terr, herr = _rk4_populations(state.matrices, h, sys.gamma, up, dn,
                                            ca, cb, dt, n_steps, stride)
    state.time += n_steps * dt
    return p_a, p_b, terr, herr


def propagate(sys: EtSystem, depth: int, t_end: float | None = None,
              dt: float | None = None, n_samples: int = 2000,
              check_dt: bool = True, return_state: bool = False):
    """RK4 propagation from rho(0) = |a><a|, sampling donor/acceptor populations.

    With ``t_end=None`` the run continues in doubling chunks until the donor
    population is steady, |P_a(t) - P_a(0.9 t)| < 1e-6.
    """
    if depth < 0:
        raise ArgumentError("depth must be >= 0")
    if dt is None:
        dt = default_dt(sys, depth)
        if t_end is not None and t_end > 0:
            dt = t_end / math.ceil(t_end / dt)
    if dt <= 0:
        raise ArgumentError("dt must be positive")
    if check_dt and dt > stability_dt(sys) * (1 + 1e-12):
        raise ArgumentError(f"dt={dt} exceeds the stability guard {stability_dt(sys):.4g} ps")
    state = initial_state(depth, default_sigma(sys))

    if t_end is not None:
        n_steps = int(round(t_end / dt))
        if n_steps > MAX_STEPS:
            raise StabilityError(f"{n_steps} steps exceed the hard limit {MAX_STEPS}")
        n_steps = max(1, n_steps)
        stride = max(1, n_steps // n_samples)
        main = n_steps - n_steps % stride
        p_a, p_b, terr, herr = _run(state, sys, dt, main, stride)
        times = np.arange(p_a.size) * stride * dt
        rest = n_steps - main
        if rest:
            # finish exactly at n_steps * dt so runs with different dt line up
            a, b, e, h = _run(state, sys, dt, rest, rest)
            p_a, p_b = np.append(p_a, a[-1]), np.append(p_b, b[-1])
            terr, herr = np.append(terr, e[-1]), max(herr, h)
            times = np.append(times, n_steps * dt)
    else:
        times, p_a, p_b, terr, herr = _run_until_steady(state, sys, dt, n_samples)

    trace = PopulationTrace(times, p_a, p_b, float(np.max(terr)), float(herr),
                            terr, depth, dt)
    if not np.isfinite(trace.trace_error_max) or trace.trace_error_max > TRACE_TOL:
        raise StabilityError(
            f"trace error {trace.trace_error_max:.3e} exceeds {TRACE_TOL}; "
            f"reduce dt ({dt:.3e} ps) or raise depth ({depth})")
    if return_state:
        return trace, state
    return trace


def _run_until_steady(state, sys, dt, n_samples):
    # first chunk: a few solvent times; later chunks double the elapsed time
    chunk_steps = max(1000, int(5.0 * sys.tau_l / dt))
    stride = max(1, chunk_steps // n_samples)
    chunk_steps -= chunk_steps % stride
    pieces_a, pieces_b, pieces_e = [], [], []
    herr = 0.0
    total = 0
    first = True
    while True:
        a, b, e, h = _run(state, sys, dt, chunk_steps, stride)
        sl = slice(None) if first else slice(1, None)
        pieces_a.append(a[sl])
        pieces_b.append(b[sl])
        pieces_e.append(e[sl])
        herr = max(herr, h)
        first = False
        total += chunk_steps
        p_a = np.concatenate(pieces_a)
        if not np.all(np.isfinite(p_a)) or np.max(np.concatenate(pieces_e)) > TRACE_TOL:
            break
        times = np.arange(p_a.size) * stride * dt
        if _steady(times, p_a):
            break
        if 2 * total > MAX_STEPS:
            raise StabilityError(f"not steady within {MAX_STEPS} steps")
        chunk_steps = total
    times = np.arange(p_a.size) * stride * dt
    return (times, p_a, np.concatenate(pieces_b), np.concatenate(pieces_e), herr)


def _steady(times, p_a):
    t_end = times[-1]
    i = int(np.searchsorted(times, 0.9 * t_end))
    return abs(p_a[-1] - p_a[min(i, p_a.size - 1)]) < STEADY_TOL


def fit_rates(trace: PopulationTrace, window=FIT_WINDOW, r2_min=FIT_R2_MIN) -> RateFit:
    """Two-state exponential fit of a donor-population trajectory.

    The long-time value comes from the last 10 % of samples; the decay of
    |P_a - P_a(inf)| inside ``window`` gives k + k', and the plateau ratio
    (1 - P_a(inf)) / P_a(inf) splits it into k and k'.
    """
    times = np.asarray(trace.times)
    p_a = np.asarray(trace.p_a)
    if not _steady(times, p_a):
        raise NotEquilibratedError(
            f"|P_a(t_end) - P_a(0.9 t_end)| >= {STEADY_TOL}; propagate longer")
    tail = times >= 0.9 * times[-1]
    p_inf = float(np.mean(p_a[tail]))
    resid = np.abs(p_a - p_inf)
    lo, hi = window
    mask = (resid >= lo) & (resid <= hi)
    if mask.sum() < 3:
        raise PoorFitError("fewer than 3 samples inside the fit window")
    t = times[mask]
    ln_r = np.log(resid[mask])
    slope, intercept = np.polyfit(t, ln_r, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((ln_r - pred) ** 2))
    ss_tot = float(np.sum((ln_r - ln_r.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if r2 < r2_min:
        raise PoorFitError(f"R^2 = {r2:.5f} below {r2_min}: kinetics not exponential", r2)
    total = -slope
    return RateFit(total * (1.0 - p_inf), total * p_inf, p_inf, total, r2)


def integrated_rates(sys: EtSystem, depth: int, dt: float | None = None,
                     t_end: float | None = None, tail_tol: float = 1e-10):
    """Rate constants as time integrals of the population flux.

    Level-0 populations are projected out of the stack; starting from the
    flux generated by |a><a| (or |b><b|), the stack is propagated and the
    flux it returns to the donor population is integrated with the same RK4
    weights.  Returns ``(k, k_bwd, tail)`` where ``tail`` is the residual
    stack amplitude at ``t_end`` relative to its initial amplitude.

    A stack holding levels 0..depth is the same truncation as the Laplace
    recursion ``kernel_at(0, depth - 1, sys)``, whose zero kernel sits at
    level depth; the two agree to integration accuracy.
    """
    if dt is None:
        dt = default_dt(sys, depth)
    if t_end is None:
        t_end = 40.0 * sys.tau_l + 40.0 * HBAR / sys.kt
    n_steps = int(math.ceil(t_end / dt))
    if n_steps > MAX_STEPS:
        raise StabilityError(f"{n_steps} steps exceed the hard limit {MAX_STEPS}")
    sigma = default_sigma(sys)
    h, ca, cb = _operators(sys)
    up, dn = coupling_factors(depth, sigma)
    out = []
    tails = []
    for site in (0, 1):
        r = np.zeros((depth + 1, 2, 2), dtype=np.complex128)
        r[0, site, site] = 1.0
        psi = np.empty_like(r)
        hierarchy_rhs(r, psi, h, sys.gamma, up, dn, ca, cb, True)
        scale = np.abs(psi).max()
        ja, _, tail = _rk4_flux(psi, h, sys.gamma, up, dn, ca, cb, dt, n_steps)
        out.append(ja)
        tails.append(tail / scale if scale > 0 else 0.0)
    k = -out[0].real
    k_bwd = out[1].real
    tail = max(tails)
    if not np.isfinite(tail) or tail > tail_tol:
        raise StabilityError(
            f"flux kernel has not decayed (relative tail {tail:.2e}); "
            f"raise t_end or reduce dt")
    return k, k_bwd, tail


def write_trajectory_csv(trace: PopulationTrace, fh):
    """CSV with header ``t_ps,p_a,p_b,trace_err``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t_ps", "p_a", "p_b", "trace_err"])
    terr = trace.trace_errors
    if terr is None:
        terr = np.abs(np.asarray(trace.p_a) + np.asarray(trace.p_b) - 1.0)
    for t, a, b, e in zip(trace.times, trace.p_a, trace.p_b, terr):
        w.writerow([f"{t:.17e}", f"{a:.17e}", f"{b:.17e}", f"{e:.17e}"])
