"""Compare the numba and pure-numpy builds of the hot kernels.

    python benchmarks/bench_kernels.py [--lattice 2000] [--points 1000000] [--repeat 5]

Both builds are imported from the same module regardless of the
SWIPTMAC_DISABLE_NUMBA flag; the first numba call (compilation) is excluded.
"""

import argparse
import math
import time

import numpy as np

from swiptmac import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lattice", type=int, default=2000, help="cells per axis")
    ap.add_argument("--points", type=int, default=1_000_000, help="Lambert W arguments")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    x = np.concatenate([
        -1 / math.e + rng.random(args.points // 2) * (1 / math.e),
        rng.random(args.points - args.points // 2) * 1e3,
    ])
    axis = np.linspace(0.0, 2.0, args.lattice + 1)
    lattice_args = (axis, axis, 0.8, 0.4, 0.5, 0.8, 0.6, 1.5, 1.0, 0.0)

    cases = [
        ("lambert_w0", lambda: _kernels.lambert_w0_numpy(x), lambda: _kernels.lambert_w0_numba(x)),
        ("lattice_argmax", lambda: _kernels.lattice_argmax_numpy(*lattice_args),
         lambda: _kernels.lattice_argmax_numba(*lattice_args)),
    ]
    print(f"numba threads: {_kernels.numba.get_num_threads()}")
    print(f"{'kernel':<16}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, slow, fast in cases:
        a, b = slow(), fast()  # warm-up and compile
        assert np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12, atol=0)
        t_np, t_nb = best_of(slow, args.repeat), best_of(fast, args.repeat)
        print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
