"""Vectorized numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_numba``; the two
are kept independent so that each can be checked against the other.
"""

import math

import numpy as np

_BIG = 1e250
_SMALL_X = 1e-6


def _miller_start(top, xmax):
    start = top + 20 + int(10.0 * max(xmax, 1.0) ** (1.0 / 3.0))
    return start + (start % 2)


def _jn_series(nmax, x):
    # two-term power series, exact to double precision for x < 1e-6
    n = np.arange(nmax + 1)
    half = 0.5 * x[:, None]
    logfact = np.array([math.lgamma(k + 1.0) for k in n])
    with np.errstate(under="ignore", divide="ignore"):
        lead = np.exp(n * np.log(np.where(half > 0, half, 1.0)) - logfact)
    lead = np.where(half > 0, lead, (n == 0).astype(float))
    return lead * (1.0 - half * half / (n + 1.0))


def jn_table(nmax, x):
    """Integer-order Bessel values J_0..J_nmax at every point of ``x``.

    Miller backward recurrence normalized with J_0 + 2*sum(J_2k) = 1.
    Returns an array of shape (len(x), nmax + 1).
    """
    x = np.ascontiguousarray(x, dtype=float).ravel()
    out = np.zeros((x.size, nmax + 1))
    small = x < _SMALL_X
    if small.any():
        out[small] = _jn_series(nmax, x[small])
    big = ~small
    if not big.any():
        return out
    xb = x[big]
    sub = np.zeros((xb.size, nmax + 1))
    start = _miller_start(max(nmax, int(xb.max())), float(xb.max()))
    f_next = np.zeros(xb.size)
    f = np.full(xb.size, 1e-30)
    total = np.zeros(xb.size)
    inv_x = 2.0 / xb
    for n in range(start, 0, -1):
        f_prev = n * inv_x * f - f_next
        f_next = f
        f = f_prev
        idx = n - 1
        if idx <= nmax:
            sub[:, idx] = f
        if idx > 0 and idx % 2 == 0:
            total += 2.0 * f
        over = np.abs(f) > _BIG
        if over.any():
            scale = np.where(over, 1.0 / _BIG, 1.0)
            f *= scale
            f_next *= scale
            total *= scale
            if idx <= nmax:
                sub[:, idx:] *= scale[:, None]
    total += f
    out[big] = sub / total[:, None]
    return out


def _sph_series(lmax, x):
    ell = np.arange(lmax + 1)
    logdf = np.array([math.lgamma(2 * k + 2.0) - math.lgamma(k + 1.0) - k * math.log(2.0)
                      for k in ell])
    with np.errstate(under="ignore", divide="ignore"):
        lead = np.exp(ell * np.log(np.where(x[:, None] > 0, x[:, None], 1.0)) - logdf)
    lead = np.where(x[:, None] > 0, lead, (ell == 0).astype(float))
    return lead * (1.0 - x[:, None] ** 2 / (2.0 * (2 * ell + 3)))


def sph_jn_table(lmax, x):
    """Spherical Bessel values j_0..j_lmax at every point of ``x``.

    Downward recurrence normalized against the closed form of j_0 or j_1,
    whichever is larger in magnitude.
    """
    x = np.ascontiguousarray(x, dtype=float).ravel()
    out = np.zeros((x.size, lmax + 1))
    small = x < _SMALL_X
    if small.any():
        out[small] = _sph_series(lmax, x[small])
    big = ~small
    if not big.any():
        return out
    xb = x[big]
    sub = np.zeros((xb.size, max(lmax, 1) + 1))
    top = max(lmax, 1)
    start = _miller_start(max(top, int(xb.max())), float(xb.max()))
    f_next = np.zeros(xb.size)
    f = np.full(xb.size, 1e-30)
    inv_x = 1.0 / xb
    for ell in range(start, 0, -1):
        f_prev = (2 * ell + 1) * inv_x * f - f_next
        f_next = f
        f = f_prev
        idx = ell - 1
        if idx <= top:
            sub[:, idx] = f
        over = np.abs(f) > _BIG
        if over.any():
            scale = np.where(over, 1.0 / _BIG, 1.0)
            f *= scale
            f_next *= scale
            if idx <= top:
                sub[:, idx:] *= scale[:, None]
    s, c = np.sin(xb), np.cos(xb)
    j0 = s / xb
    j1 = s / xb ** 2 - c / xb
    use0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use0, j0 / sub[:, 0], j1 / sub[:, 1])
    out[big] = (sub * scale[:, None])[:, : lmax + 1]
    return out


def bessel_order2(order2, x):
    """J_nu(x) for nu = order2 / 2 (integer or half-integer), x >= 0."""
    x = np.asarray(x, dtype=float)
    if order2 % 2 == 0:
        n = order2 // 2
        return jn_table(n, x)[:, n]
    ell = (order2 - 1) // 2
    vals = sph_jn_table(ell, x)[:, ell]
    return np.sqrt(2.0 * x / np.pi) * vals


def bisect_bessel_zeros(order2, lo, hi, rtol):
    """Refine one zero of J_{order2/2} inside each bracket (lo[i], hi[i])."""
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    if a.size == 0:
        return a
    fa = bessel_order2(order2, a)
    active = np.ones(a.size, dtype=bool)
    for _ in range(200):
        mid = 0.5 * (a + b)
        active &= (b - a > rtol * mid) & (mid != a) & (mid != b)
        if not active.any():
            break
        idx = np.flatnonzero(active)
        fm = bessel_order2(order2, mid[idx])
        same = (fm > 0) == (fa[idx] > 0)
        hit = fm == 0.0
        a[idx] = np.where(same & ~hit, mid[idx], np.where(hit, mid[idx], a[idx]))
        fa[idx] = np.where(same & ~hit, fm, fa[idx])
        b[idx] = np.where(same & ~hit, b[idx], mid[idx])
    return 0.5 * (a + b)


def trig_mode_integrals(m, parity, amp2, theta, vecs):
    """out[k, v] = amp2[k] * sum_i trig_k(m_k theta_i)^2 vecs[v, i].

    ``parity`` is 0 for cosine and 1 for sine modes. Uses the identity
    trig^2 = (1 +- cos 2m theta) / 2 and a table of unique frequencies.
    """
    m = np.asarray(m, dtype=np.int64)
    parity = np.asarray(parity, dtype=np.int64)
    vecs = np.atleast_2d(np.asarray(vecs, dtype=float))
    freqs, inverse = np.unique(m, return_inverse=True)
    cos_moments = np.cos(np.outer(2.0 * freqs, theta)) @ vecs.T
    base = vecs.sum(axis=1)
    sign = np.where(parity == 0, 1.0, -1.0)
    return np.asarray(amp2)[:, None] * 0.5 * (base[None, :] + sign[:, None] * cos_moments[inverse])
