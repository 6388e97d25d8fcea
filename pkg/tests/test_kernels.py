import os
import subprocess
import sys

import numpy as np
import pytest

from speclab import kernels
from speclab.kernels import _numba as nb
from speclab.kernels import _numpy as npk


@pytest.fixture
def xs():
    return np.concatenate([[0.0, 1e-9, 1e-7], np.linspace(0.01, 90.0, 700)])


def test_jn_table_backends_agree(xs):
    a, b = npk.jn_table(50, xs), nb.jn_table(50, xs)
    assert a.shape == (xs.size, 51)
    assert np.max(np.abs(a - b)) < 1e-14


def test_sph_jn_table_backends_agree(xs):
    assert np.max(np.abs(npk.sph_jn_table(30, xs) - nb.sph_jn_table(30, xs))) < 1e-14


def test_bessel_order2_backends_agree(xs):
    for order2 in (0, 1, 7, 40, 61):
        assert np.max(np.abs(npk.bessel_order2(order2, xs) - nb.bessel_order2(order2, xs))) < 1e-14


def test_bisection_backends_agree():
    lo = (np.arange(1, 60) - 0.5) * np.pi
    hi = np.arange(1, 60) * np.pi
    a = npk.bisect_bessel_zeros(0, lo, hi, 1e-15)
    b = nb.bisect_bessel_zeros(0, lo, hi, 1e-15)
    assert np.max(np.abs(a - b) / a) < 1e-15


def test_trig_mode_integrals_backends_agree_with_direct_sum(rng):
    m = rng.integers(0, 30, 50)
    par = np.where(m == 0, 0, rng.integers(0, 2, 50))
    amp2 = rng.uniform(0.5, 2.0, 50)
    theta = 2 * np.pi * np.arange(512) / 512
    vecs = rng.standard_normal((3, 512))
    direct = np.empty((50, 3))
    for k in range(50):
        trig = np.cos(m[k] * theta) if par[k] == 0 else np.sin(m[k] * theta)
        direct[k] = amp2[k] * (trig ** 2) @ vecs.T
    for backend in (npk, nb):
        assert np.max(np.abs(backend.trig_mode_integrals(m, par, amp2, theta, vecs) - direct)) < 1e-11


def test_wrapper_coerces_inputs():
    out = kernels.jn_table(3, [0.5, 1.0])
    assert out.shape == (2, 4)
    assert kernels.BACKEND in ("numba", "numpy")


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, SPECLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import speclab.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["SPECLAB_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", "import speclab.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"
