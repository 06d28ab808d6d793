"""Compare the numba and numpy shifted-tridiagonal kernels.

Run with ``python3 benchmarks/bench_tridiag.py [--modes M] [--rows N]``.
The default sizes match one strip solve at n_t = 1024 (padded twice) and
n_theta = 129. Both backends must agree to roundoff before timings are
printed.
"""

import argparse
import timeit

import numpy as np

from conoshock._accel import HAVE_NUMBA, shifted_tridiag


def problem(m, n, seed=0):
    rng = np.random.default_rng(seed)
    sub = rng.normal(size=n) + 1j * rng.normal(size=n)
    sup = rng.normal(size=n) + 1j * rng.normal(size=n)
    diag = 6.0 + rng.normal(size=n) + 0j
    shift = np.linspace(0.0, 50.0, m) + 3j * np.linspace(-5.0, 5.0, m)
    rhs = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
    return sub, diag, sup, shift, rhs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, default=1025)
    ap.add_argument("--rows", type=int, default=129)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    args_ = problem(args.modes, args.rows)
    backends = ["numpy"] + (["jit"] if HAVE_NUMBA else [])
    ref, _ = shifted_tridiag(*args_, backend="numpy")
    times = {}
    for name in backends:
        x, _ = shifted_tridiag(*args_, backend=name)  # warm-up and compile
        err = np.max(np.abs(x - ref))
        assert err < 1e-12, f"{name} disagrees with numpy by {err:.2e}"
        t = min(timeit.repeat(lambda: shifted_tridiag(*args_, backend=name), number=3, repeat=args.repeat)) / 3
        times[name] = t
        print(f"{name:6s} {args.modes} modes x {args.rows} rows: {1e3 * t:8.3f} ms")
    if "jit" in times:
        print(f"speed-up jit/numpy: {times['numpy'] / times['jit']:.1f}x")
    else:
        print("numba unavailable or disabled; numpy only")


if __name__ == "__main__":
    main()
