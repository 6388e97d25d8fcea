"""numba-compiled kernels; same signatures and semantics as ``_numpy``."""

import math

import numpy as np
from numba import njit

_BIG = 1e250
_SMALL_X = 1e-6


@njit(cache=True)
def _miller_start(top, x):
    start = top + 20 + int(10.0 * max(x, 1.0) ** (1.0 / 3.0))
    return start + (start % 2)


@njit(cache=True)
def _jn_point(nmax, x, out):
    if x < _SMALL_X:
        half = 0.5 * x
        for n in range(nmax + 1):
            if half == 0.0:
                out[n] = 1.0 if n == 0 else 0.0
            else:
                lead = math.exp(n * math.log(half) - math.lgamma(n + 1.0))
                out[n] = lead * (1.0 - half * half / (n + 1.0))
        return
    start = _miller_start(max(nmax, int(x)), x)
    f_next = 0.0
    f = 1e-30
    total = 0.0
    inv_x = 2.0 / x
    for n in range(start, 0, -1):
        f_prev = n * inv_x * f - f_next
        f_next = f
        f = f_prev
        idx = n - 1
        if idx <= nmax:
            out[idx] = f
        if idx > 0 and idx % 2 == 0:
            total += 2.0 * f
        if abs(f) > _BIG:
            f /= _BIG
            f_next /= _BIG
            total /= _BIG
            for j in range(idx, nmax + 1):
                out[j] /= _BIG
    total += f
    for j in range(nmax + 1):
        out[j] /= total


@njit(cache=True)
def jn_table(nmax, x):
    out = np.zeros((x.size, nmax + 1))
    for i in range(x.size):
        _jn_point(nmax, x[i], out[i])
    return out


@njit(cache=True)
def _sph_point(lmax, x, out):
    if x < _SMALL_X:
        logdf = 0.0
        for ell in range(lmax + 1):
            if ell > 0:
                logdf += math.log(2.0 * ell + 1.0)
            if x == 0.0:
                out[ell] = 1.0 if ell == 0 else 0.0
            else:
                lead = math.exp(ell * math.log(x) - logdf)
                out[ell] = lead * (1.0 - x * x / (2.0 * (2 * ell + 3)))
        return
    top = max(lmax, 1)
    buf = np.zeros(top + 1)
    start = _miller_start(max(top, int(x)), x)
    f_next = 0.0
    f = 1e-30
    inv_x = 1.0 / x
    for ell in range(start, 0, -1):
        f_prev = (2 * ell + 1) * inv_x * f - f_next
        f_next = f
        f = f_prev
        idx = ell - 1
        if idx <= top:
            buf[idx] = f
        if abs(f) > _BIG:
            f /= _BIG
            f_next /= _BIG
            for j in range(idx, top + 1):
                buf[j] /= _BIG
    s = math.sin(x)
    c = math.cos(x)
    j0 = s / x
    j1 = s / (x * x) - c / x
    if abs(j0) >= abs(j1):
        scale = j0 / buf[0]
    else:
        scale = j1 / buf[1]
    for ell in range(lmax + 1):
        out[ell] = buf[ell] * scale


@njit(cache=True)
def sph_jn_table(lmax, x):
    out = np.zeros((x.size, lmax + 1))
    for i in range(x.size):
        _sph_point(lmax, x[i], out[i])
    return out


@njit(cache=True)
def _jv_scalar(order2, x, scratch):
    if order2 % 2 == 0:
        n = order2 // 2
        _jn_point(n, x, scratch)
        return scratch[n]
    ell = (order2 - 1) // 2
    _sph_point(ell, x, scratch)
    return math.sqrt(2.0 * x / math.pi) * scratch[ell]


@njit(cache=True)
def bessel_order2(order2, x):
    scratch = np.zeros(order2 // 2 + 2)
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = _jv_scalar(order2, x[i], scratch)
    return out


@njit(cache=True)
def bisect_bessel_zeros(order2, lo, hi, rtol):
    scratch = np.zeros(order2 // 2 + 2)
    out = np.empty(lo.size)
    for i in range(lo.size):
        a = lo[i]
        b = hi[i]
        fa = _jv_scalar(order2, a, scratch)
        for _ in range(200):
            mid = 0.5 * (a + b)
            if b - a <= rtol * mid or mid == a or mid == b:
                break
            fm = _jv_scalar(order2, mid, scratch)
            if fm == 0.0:
                a = mid
                b = mid
                break
            if (fm > 0.0) == (fa > 0.0):
                a = mid
                fa = fm
            else:
                b = mid
        out[i] = 0.5 * (a + b)
    return out


@njit(cache=True)
def trig_mode_integrals(m, parity, amp2, theta, vecs):
    # trig^2 = (1 +- cos 2m theta) / 2: one cosine moment per distinct m
    n_modes = m.size
    n_vec = vecs.shape[0]
    mmax = 0
    for k in range(n_modes):
        mmax = max(mmax, m[k])
    used = np.zeros(mmax + 1, dtype=np.bool_)
    for k in range(n_modes):
        used[m[k]] = True
    moments = np.zeros((mmax + 1, n_vec))
    for f in range(mmax + 1):
        if not used[f]:
            continue
        w = 2.0 * f
        for i in range(theta.size):
            c = math.cos(w * theta[i])
            for v in range(n_vec):
                moments[f, v] += c * vecs[v, i]
    base = np.zeros(n_vec)
    for v in range(n_vec):
        for i in range(theta.size):
            base[v] += vecs[v, i]
    out = np.empty((n_modes, n_vec))
    for k in range(n_modes):
        sign = 1.0 if parity[k] == 0 else -1.0
        for v in range(n_vec):
            out[k, v] = 0.5 * amp2[k] * (base[v] + sign * moments[m[k], v])
    return out
