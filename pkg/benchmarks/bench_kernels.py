"""Compare the numba kernels with the pure-numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. Both backends are imported
directly, so the SPECLAB_DISABLE_NUMBA flag does not matter here. Each kernel
is called once first so numba compilation is excluded from the timings.
"""

import argparse
from timeit import repeat

import numpy as np

from speclab.kernels import _numba as nb
from speclab.kernels import _numpy as npk


def cases(rng):
    x = np.sort(rng.uniform(0.0, 60.0, 4000))
    lo = (np.arange(1, 201) - 0.5) * np.pi
    hi = np.arange(1, 201) * np.pi
    m = rng.integers(0, 60, 2000)
    par = rng.integers(0, 2, 2000)
    amp2 = rng.uniform(0.5, 2.0, 2000)
    theta = 2 * np.pi * np.arange(4096) / 4096
    vecs = rng.standard_normal((4, 4096))
    return {
        "jn_table(60, 4000 pts)": lambda k: k.jn_table(60, x),
        "sph_jn_table(40, 4000 pts)": lambda k: k.sph_jn_table(40, x),
        "bessel_order2(31, 4000 pts)": lambda k: k.bessel_order2(31, x),
        "bisect_bessel_zeros(0, 200)": lambda k: k.bisect_bessel_zeros(0, lo, hi, 1e-15),
        "trig_mode_integrals(2000x4096)": lambda k: k.trig_mode_integrals(m, par, amp2, theta, vecs),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<32} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max |diff|':>11}")
    for name, fn in cases(rng).items():
        ref, fast = fn(npk), fn(nb)  # warm-up, also triggers compilation
        diff = float(np.max(np.abs(np.asarray(ref) - np.asarray(fast))))
        t_np = min(repeat(lambda: fn(npk), number=args.number, repeat=args.repeat)) / args.number
        t_nb = min(repeat(lambda: fn(nb), number=args.number, repeat=args.repeat)) / args.number
        print(f"{name:<32} {1e3 * t_np:>11.3f} {1e3 * t_nb:>11.3f} {t_np / t_nb:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
