"""Bessel values, Bessel zeros and normalized associated Legendre functions.

Zeros are located with exact brackets from interlacing: for every order nu,

    j_{nu,n} < j_{nu+1,n} < j_{nu,n+1},

so the zeros of order nu+1 are bracketed one per interval by consecutive
zeros of order nu. The base orders have closed-form brackets: J_{1/2} has
zeros n*pi exactly, and j_{0,n} lies in ((n - 1/2) pi, n pi) between the
zeros of J_{-1/2} and J_{1/2}.
"""

from fractions import Fraction

import numpy as np

from . import kernels
from .errors import ConvergenceFailure, InvalidParameter

ZERO_RTOL = 1e-15


def _order2(order):
    twice = Fraction(order).limit_denominator(4) * 2
    if twice.denominator != 1 or twice < 0:
        raise InvalidParameter(f"order must be a nonnegative integer or half-integer, got {order!r}")
    return int(twice)


def bessel_value(order, x):
    """First-kind Bessel function J_order(x) for integer or half-integer order.

    ``x`` may be a scalar or array (x >= 0). Half-integer orders go through the
    spherical Bessel recurrence, J_{l+1/2}(x) = sqrt(2x/pi) j_l(x).
    """
    order2 = _order2(order)
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise InvalidParameter("bessel_value requires x >= 0")
    vals = kernels.bessel_order2(order2, xs.ravel()).reshape(xs.shape)
    return float(vals) if vals.ndim == 0 else vals


class ZeroTable:
    """Lazily extended table of positive Bessel zeros for one order family.

    ``half=False`` covers integer orders 0, 1, 2, ...; ``half=True`` covers
    l + 1/2 for l = 0, 1, 2, ... (index ``l`` in the table).
    """

    def __init__(self, half):
        self.half = half
        self._zeros = {}

    def _order2(self, idx):
        return 2 * idx + 1 if self.half else 2 * idx

    def _base(self, count):
        n = np.arange(1, count + 1, dtype=float)
        if self.half:
            return n * np.pi
        return kernels.bisect_bessel_zeros(0, (n - 0.5) * np.pi, n * np.pi, ZERO_RTOL)

    def ensure(self, idx, count):
        """Make sure at least ``count`` zeros of order index ``idx`` exist."""
        have = self._zeros.get(idx)
        if have is not None and have.size >= count:
            return have
        if idx == 0:
            zeros = self._base(count)
        else:
            prev = self.ensure(idx - 1, count + 1)
            start = 0 if have is None else have.size
            lo, hi = prev[start:count], prev[start + 1:count + 1]
            new = kernels.bisect_bessel_zeros(self._order2(idx), lo, hi, ZERO_RTOL)
            if not np.all((new > lo) & (new < hi)):
                raise ConvergenceFailure(f"zero refinement left its bracket for order index {idx}")
            zeros = new if have is None else np.concatenate([have, new])
        self._zeros[idx] = zeros
        return zeros

    def zero(self, idx, n):
        return float(self.ensure(idx, n)[n - 1])

    def family_below(self, bound):
        """{order index: zeros below bound} for every order with j_{nu,1} < bound.

        One bisection batch per order. Order idx + 1 inherits one bracket fewer
        than order idx has zeros, so base zeros are kept with a headroom of one
        zero per contributing order beyond the first zero above ``bound``.
        """
        n_orders = 0
        # j_{nu,1} > nu + 1.8557 nu^(1/3) bounds the contributing orders
        while n_orders + 1.8557 * n_orders ** (1.0 / 3.0) < bound:
            n_orders += 1
        headroom = n_orders + 2
        zeros = self._base(int(bound / np.pi) + 2 + headroom)
        out = {}
        idx = 0
        while True:
            if zeros.size == 0 or zeros[-1] < bound:
                raise ConvergenceFailure(f"zero sweep ran out of brackets at order index {idx}")
            first_above = int(np.searchsorted(zeros, bound))
            if first_above == 0:
                # j_{nu,1} increases with nu, so no higher order contributes
                return out
            out[idx] = zeros[:first_above].copy()
            zeros = zeros[: first_above + 1 + headroom]
            idx += 1
            headroom = max(headroom - 1, 1)
            lo, hi = zeros[:-1], zeros[1:]
            zeros = kernels.bisect_bessel_zeros(self._order2(idx), lo, hi, ZERO_RTOL)
            if not np.all((zeros > lo) & (zeros < hi)):
                raise ConvergenceFailure(f"zero refinement left its bracket for order index {idx}")


def bessel_zero(order, n):
    """n-th positive zero of J_order (integer or half-integer order)."""
    order2 = _order2(order)
    if n < 1:
        raise InvalidParameter("zero index n must be >= 1")
    table = ZeroTable(half=bool(order2 % 2))
    return table.zero(order2 // 2, int(n))


def legendre_table(lmax, t):
    """Normalized associated Legendre functions on [-1, 1].

    Returns ``P`` with shape (lmax + 1, lmax + 1, len(t)) where ``P[l, m]``
    satisfies int_{-1}^{1} P[l, m](t)^2 dt = 1 for m <= l (zero for m > l).
    The Condon-Shortley phase is omitted.
    """
    t = np.asarray(t, dtype=float).ravel()
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    P = np.zeros((lmax + 1, lmax + 1, t.size))
    P[0, 0] = np.sqrt(0.5)
    for m in range(1, lmax + 1):
        P[m, m] = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * P[m - 1, m - 1]
    for m in range(0, lmax):
        P[m + 1, m] = np.sqrt(2.0 * m + 3.0) * t * P[m, m]
    for m in range(0, lmax + 1):
        for ell in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
            b = np.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
            P[ell, m] = a * (t * P[ell - 1, m] - b * P[ell - 2, m])
    return P
