"""Hot numerical kernels.

Two loops dominate runtime: the inward continued-fraction recursion over
hierarchy levels, and the fixed-step RK4 propagation of the hierarchy stack.
Each has a scalar-loop form (compiled by numba when available) and a numpy
form that vectorizes over the batch (continued fraction) or over levels
(hierarchy).  ``ETK_DISABLE_NUMBA=1`` selects the numpy forms.

Everything here works on plain floats and arrays; the typed public API
lives in cfkernel, rates and heom.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

SINGULAR_TOL = 1e-300

# ---------------------------------------------------------------------------
# continued fraction
# ---------------------------------------------------------------------------


def _cf_loop(s, depth, eps, vh, eta_re, eta_im, gamma):
    """Level-0 kernel elements for every Laplace argument in ``s``.

    ``eps`` is (E0 + lambda)/hbar and ``vh`` is V/hbar.  Returns
    ``(x, y, z, p, bad)`` with p = x + y as carried by the recursion (far
    more accurate than x + y re-formed from the rounded elements), and
    ``bad[i]`` the level at which a singular denominator was met for
    ``s[i]``, or -1.

    With a = alpha + beta and b = beta - y the 2x2 inversion is written in
    u = a - b = alpha + y and w = a + b.  Deep in the hierarchy x ~ -y, so
    |a|^2 - |b|^2 and the sum x + y lose most of their digits when formed
    directly; carrying p = x + y and using

        |a|^2 - |b|^2 = Re(w conj u)
        x + y = n [Re(eta conj u) + i Im(eta conj w)] / (|a|^2 - |b|^2)

    keeps the recursion at machine precision.
    """
    m = s.shape[0]
    x_out = np.zeros(m, dtype=np.complex128)
    y_out = np.zeros(m, dtype=np.complex128)
    z_out = np.zeros(m, dtype=np.complex128)
    p_out = np.zeros(m, dtype=np.complex128)
    bad = np.full(m, -1, dtype=np.int64)
    eta = complex(eta_re, eta_im)
    d_eta = complex(0.0, 2.0 * eta_im)
    ieps = complex(0.0, eps)
    for i in range(m):
        x = 0j
        p = 0j
        z = 0j
        for n in range(depth + 1, 0, -1):
            sa = s[i] + n * gamma
            y = p - x
            u = sa + ieps + p
            beta = vh * (2.0 * vh + 1j * z) / sa
            w = u + 2.0 * (beta - y)
            uc = u.conjugate()
            wc = w.conjugate()
            det = (w * uc).real
            if abs(det) < SINGULAR_TOL:
                bad[i] = n
                break
            zw = z * wc
            zu = z * uc
            num = complex(zw.real - vh * w.imag, zu.imag - vh * u.real)
            eu = eta * uc
            ew = eta * wc
            p = n * complex(eu.real, ew.imag) / det
            x = eta * n * (wc + uc) / (2.0 * det)
            z = -d_eta * n * num / (det * sa)
        x_out[i] = x
        y_out[i] = p - x
        p_out[i] = p
        z_out[i] = z
    return x_out, y_out, z_out, p_out, bad


def _cf_vec(s, depth, eps, vh, eta_re, eta_im, gamma):
    """numpy version of ``_cf_loop``: one pass per level, vectorized over ``s``."""
    s = np.asarray(s, dtype=np.complex128)
    eta = complex(eta_re, eta_im)
    d_eta = 2j * eta_im
    x = np.zeros_like(s)
    p = np.zeros_like(s)
    z = np.zeros_like(s)
    bad = np.full(s.shape, -1, dtype=np.int64)
    alive = np.ones(s.shape, dtype=bool)
    for n in range(depth + 1, 0, -1):
        sa = s + n * gamma
        y = p - x
        u = sa + 1j * eps + p
        beta = vh * (2.0 * vh + 1j * z) / sa
        w = u + 2.0 * (beta - y)
        uc = u.conj()
        wc = w.conj()
        det = (w * uc).real
        hit = alive & (np.abs(det) < SINGULAR_TOL)
        if hit.any():
            bad[hit] = n
            alive &= ~hit
        safe = np.where(alive, det, 1.0)
        num = ((z * wc).real - vh * w.imag) + 1j * ((z * uc).imag - vh * u.real)
        eu = eta * uc
        ew = eta * wc
        p = np.where(alive, n * (eu.real + 1j * ew.imag) / safe, p)
        x = np.where(alive, eta * n * (wc + uc) / (2.0 * safe), x)
        z = np.where(alive, -d_eta * n * num / (safe * sa), z)
    return x, p - x, z, p, bad


_cf_loop_jit = njit(cache=True)(_cf_loop)
cf_level0 = _cf_loop_jit if USE_NUMBA else _cf_vec

# ---------------------------------------------------------------------------
# hierarchy propagation
# ---------------------------------------------------------------------------
# State layout: complex array (N+1, 2, 2), index 0 = donor |a>, 1 = acceptor |b>.
# Auxiliaries are stored normalized, rho_n = c_n * r[n]; ``up[n] = c_{n+1}/c_n``
# multiplies B r[n+1] and ``dn[n] = n c_{n-1}/c_n`` multiplies A r[n-1].


def _deriv_loop(r, out, h, gamma, up, dn, ca, cb, project):
    depth = r.shape[0] - 1
    h00 = h[0, 0]
    h01 = h[0, 1]
    h11 = h[1, 1]
    ih01 = -1j * h01
    ieps = -1j * (h00 - h11)
    # A acting on the ab, ba and bb elements, pre-multiplied by -i
    a01 = -1j * (-ca - 1j * cb)
    a10 = -1j * (ca - 1j * cb)
    a11 = -1j * (-2j * cb)
    for n in range(depth + 1):
        r00 = r[n, 0, 0]
        r01 = r[n, 0, 1]
        r10 = r[n, 1, 0]
        r11 = r[n, 1, 1]
        damp = n * gamma
        # -i [H, r] for real symmetric H
        d00 = ih01 * (r10 - r01) - damp * r00
        d01 = ih01 * (r11 - r00) + (ieps - damp) * r01
        d10 = ih01 * (r00 - r11) - (ieps + damp) * r10
        d11 = ih01 * (r01 - r10) - damp * r11
        if n < depth:
            # -i B X with B X = [|b><b|, X]: +ba / -ab, populations untouched
            u = 1j * up[n]
            d01 += u * r[n + 1, 0, 1]
            d10 -= u * r[n + 1, 1, 0]
        if n > 0:
            w = dn[n]
            d01 += (w * a01) * r[n - 1, 0, 1]
            d10 += (w * a10) * r[n - 1, 1, 0]
            d11 += (w * a11) * r[n - 1, 1, 1]
        if project and n == 0:
            d00 = 0j
            d11 = 0j
        out[n, 0, 0] = d00
        out[n, 0, 1] = d01
        out[n, 1, 0] = d10
        out[n, 1, 1] = d11


def _deriv_vec(r, out, h, gamma, up, dn, ca, cb, project):
    depth = r.shape[0] - 1
    n = np.arange(depth + 1)
    out[...] = -1j * (h @ r - r @ h) - (n * gamma)[:, None, None] * r
    if depth > 0:
        u = up[:-1]
        out[:-1, 0, 1] += 1j * u * r[1:, 0, 1]
        out[:-1, 1, 0] -= 1j * u * r[1:, 1, 0]
        w = dn[1:]
        out[1:, 0, 1] += -1j * w * (-ca - 1j * cb) * r[:-1, 0, 1]
        out[1:, 1, 0] += -1j * w * (ca - 1j * cb) * r[:-1, 1, 0]
        out[1:, 1, 1] += -1j * w * (-2j * cb) * r[:-1, 1, 1]
    if project:
        out[0, 0, 0] = 0.0
        out[0, 1, 1] = 0.0


_deriv_loop_jit = njit(cache=True, fastmath=True)(_deriv_loop)
hierarchy_rhs = _deriv_loop_jit if USE_NUMBA else _deriv_vec
_deriv = hierarchy_rhs


def _stage_loop(r, k, acc, tmp, c, w, first):
    """tmp = r + c*k; acc = w*k (first stage) or acc += w*k."""
    rf = r.reshape(-1)
    kf = k.reshape(-1)
    af = acc.reshape(-1)
    tf = tmp.reshape(-1)
    if first:
        for i in range(rf.size):
            af[i] = w * kf[i]
            tf[i] = rf[i] + c * kf[i]
    else:
        for i in range(rf.size):
            af[i] += w * kf[i]
            tf[i] = rf[i] + c * kf[i]


def _stage_vec(r, k, acc, tmp, c, w, first):
    if first:
        np.multiply(k, w, out=acc)
    else:
        acc += w * k
    np.add(r, c * k, out=tmp)


def _finish_loop(r, k, acc, dt):
    rf = r.reshape(-1)
    kf = k.reshape(-1)
    af = acc.reshape(-1)
    sixth = dt / 6.0
    for i in range(rf.size):
        rf[i] += sixth * (af[i] + kf[i])


def _finish_vec(r, k, acc, dt):
    r += (dt / 6.0) * (acc + k)


if USE_NUMBA:
    _stage = njit(cache=True, fastmath=True)(_stage_loop)
    _finish = njit(cache=True, fastmath=True)(_finish_loop)
else:
    _stage = _stage_vec
    _finish = _finish_vec


@njit(cache=True)
def _rk4_step(r, k, acc, tmp, h, gamma, up, dn, ca, cb, dt, project):
    """One classical RK4 step in place.  With ``project`` the level-0
    populations of every stage derivative are removed, and the removed
    flux is returned as its RK4-weighted sum (times dt)."""
    half = 0.5 * dt
    fa = 0j
    fb = 0j
    _deriv(r, k, h, gamma, up, dn, ca, cb, False)
    if project:
        fa += k[0, 0, 0]
        fb += k[0, 1, 1]
        k[0, 0, 0] = 0.0
        k[0, 1, 1] = 0.0
    _stage(r, k, acc, tmp, half, 1.0, True)
    _deriv(tmp, k, h, gamma, up, dn, ca, cb, False)
    if project:
        fa += 2.0 * k[0, 0, 0]
        fb += 2.0 * k[0, 1, 1]
        k[0, 0, 0] = 0.0
        k[0, 1, 1] = 0.0
    _stage(r, k, acc, tmp, half, 2.0, False)
    _deriv(tmp, k, h, gamma, up, dn, ca, cb, False)
    if project:
        fa += 2.0 * k[0, 0, 0]
        fb += 2.0 * k[0, 1, 1]
        k[0, 0, 0] = 0.0
        k[0, 1, 1] = 0.0
    _stage(r, k, acc, tmp, dt, 2.0, False)
    _deriv(tmp, k, h, gamma, up, dn, ca, cb, False)
    if project:
        fa += k[0, 0, 0]
        fb += k[0, 1, 1]
        k[0, 0, 0] = 0.0
        k[0, 1, 1] = 0.0
    _finish(r, k, acc, dt)
    return fa * (dt / 6.0), fb * (dt / 6.0)


@njit(cache=True)
def _rk4_populations(r, h, gamma, up, dn, ca, cb, dt, n_steps, stride):
    """Propagate ``r`` in place for ``n_steps`` and sample every ``stride``.

    Returns ``(p_a, p_b, trace_err, herm_err)``; sample 0 is the initial state.
    """
    n_out = n_steps // stride + 1
    p_a = np.empty(n_out)
    p_b = np.empty(n_out)
    trace_err = np.empty(n_out)
    herm_err = 0.0
    k = np.empty_like(r)
    acc = np.empty_like(r)
    tmp = np.empty_like(r)
    p_a[0] = r[0, 0, 0].real
    p_b[0] = r[0, 1, 1].real
    trace_err[0] = abs(r[0, 0, 0] + r[0, 1, 1] - 1.0)
    j = 1
    for step in range(1, n_steps + 1):
        _rk4_step(r, k, acc, tmp, h, gamma, up, dn, ca, cb, dt, False)
        if step % stride == 0:
            p_a[j] = r[0, 0, 0].real
            p_b[j] = r[0, 1, 1].real
            trace_err[j] = abs(r[0, 0, 0] + r[0, 1, 1] - 1.0)
            e = max(abs(r[0, 0, 1] - r[0, 1, 0].conjugate()),
                    abs(r[0, 0, 0].imag), abs(r[0, 1, 1].imag))
            if e > herm_err:
                herm_err = e
            if not np.isfinite(trace_err[j]):
                return p_a[: j + 1], p_b[: j + 1], trace_err[: j + 1], herm_err
            j += 1
    return p_a[:j], p_b[:j], trace_err[:j], herm_err


@njit(cache=True)
def _rk4_flux(r, h, gamma, up, dn, ca, cb, dt, n_steps):
    """Integrate the population flux of a projected hierarchy.

    ``r`` holds the coherence/auxiliary part (level-0 populations zero).
    Returns the time integral of the level-0 population derivative
    ``(J_a, J_b)`` and the final max-abs amplitude of ``r``.
    """
    k = np.empty_like(r)
    acc = np.empty_like(r)
    tmp = np.empty_like(r)
    ja = 0j
    jb = 0j
    for step in range(n_steps):
        fa, fb = _rk4_step(r, k, acc, tmp, h, gamma, up, dn, ca, cb, dt, True)
        ja += fa
        jb += fb
    tail = np.abs(r).max()
    return ja, jb, tail
