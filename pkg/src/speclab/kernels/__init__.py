"""Hot numerical kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``SPECLAB_DISABLE_NUMBA=1``
to force the numpy implementations (useful for debugging and for the
benchmark in ``benchmarks/``). If numba cannot be imported the numpy path is
used silently.
"""

import os

import numpy as np

from . import _numpy as numpy_backend

_DISABLED = os.environ.get("SPECLAB_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

numba_backend = None
if not _DISABLED:
    try:
        from . import _numba as numba_backend
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba_backend = None

_active = numba_backend if numba_backend is not None else numpy_backend
BACKEND = "numba" if numba_backend is not None else "numpy"


def jn_table(nmax, x):
    return _active.jn_table(int(nmax), np.ascontiguousarray(x, dtype=float).ravel())


def sph_jn_table(lmax, x):
    return _active.sph_jn_table(int(lmax), np.ascontiguousarray(x, dtype=float).ravel())


def bessel_order2(order2, x):
    return _active.bessel_order2(int(order2), np.ascontiguousarray(x, dtype=float).ravel())


def bisect_bessel_zeros(order2, lo, hi, rtol=1e-15):
    return _active.bisect_bessel_zeros(
        int(order2),
        np.ascontiguousarray(lo, dtype=float).ravel(),
        np.ascontiguousarray(hi, dtype=float).ravel(),
        float(rtol),
    )


def trig_mode_integrals(m, parity, amp2, theta, vecs):
    return _active.trig_mode_integrals(
        np.ascontiguousarray(m, dtype=np.int64),
        np.ascontiguousarray(parity, dtype=np.int64),
        np.ascontiguousarray(amp2, dtype=float),
        np.ascontiguousarray(theta, dtype=float),
        np.ascontiguousarray(np.atleast_2d(vecs), dtype=float),
    )


__all__ = [
    "BACKEND",
    "bessel_order2",
    "bisect_bessel_zeros",
    "jn_table",
    "numba_backend",
    "numpy_backend",
    "sph_jn_table",
    "trig_mode_integrals",
]
