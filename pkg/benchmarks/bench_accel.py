"""Compare the numba and pure-numpy paths of the batch kernel blocks.

Run with ``python3 benchmarks/bench_accel.py [--sizes 50 200 800]``.
"""
import argparse
import timeit

import numpy as np

from kernelquant import _accel


def _bidisc_inputs(n, rng):
    z = 0.6 * (rng.uniform(-1, 1, (n, 2)) + 1j * rng.uniform(-1, 1, (n, 2))) / np.sqrt(2)
    return z, z.copy()


def _chi_inputs(n, rng):
    s = rng.normal(size=n * n) + 0.3j * rng.normal(size=n * n)
    atoms = np.linspace(-2, 2, 16)
    w = np.full(16, 1 / 16)
    return s, atoms, w


CASES = {
    "bidisc_blocks": (_bidisc_inputs, _accel.bidisc_blocks_numpy, _accel.bidisc_blocks_numba),
    "discrete_chi": (_chi_inputs, _accel.discrete_chi_numpy, _accel.discrete_chi_numba),
}


def bench(sizes, repeat=5, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for name, (make, f_np, f_nb) in CASES.items():
        for n in sizes:
            args = make(n, rng)
            f_nb(*args)  # compile outside the timing
            err = float(np.max(np.abs(f_np(*args) - f_nb(*args))))
            t_np = min(timeit.repeat(lambda: f_np(*args), number=3, repeat=repeat)) / 3
            t_nb = min(timeit.repeat(lambda: f_nb(*args), number=3, repeat=repeat)) / 3
            rows.append((name, n, t_np, t_nb, err))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 200, 800])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel._HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return
    print(f"{'kernel':<15}{'n':>6}{'numpy [ms]':>13}{'numba [ms]':>13}{'speedup':>9}{'max diff':>11}")
    for name, n, t_np, t_nb, err in bench(args.sizes, args.repeat):
        print(f"{name:<15}{n:>6}{1e3 * t_np:>13.3f}{1e3 * t_nb:>13.3f}{t_np / t_nb:>9.2f}{err:>11.1e}")


if __name__ == "__main__":
    main()
