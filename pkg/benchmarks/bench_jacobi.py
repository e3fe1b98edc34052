"""Time the compiled and pure-Python Jacobi eigensolvers (numpy eigh for reference).

Usage: python benchmarks/bench_jacobi.py [--sizes 5 10 20 40] [--repeat 5]
"""
import argparse
import time

import numpy as np

from topodetect import _jacobi_py

try:
    from topodetect import _jacobi as _jacobi_ext
except ImportError:
    _jacobi_ext = None


def best_time(fn, a, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(a)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20, 40])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    solvers = [("python", lambda a: _jacobi_py.jacobi_eigh(a.copy(), 1e-14, 100))]
    if _jacobi_ext is not None:
        solvers.insert(0, ("cython", lambda a: _jacobi_ext.jacobi_eigh(a.copy(), 1e-14, 100)))
    solvers.append(("numpy.eigh", np.linalg.eigh))

    print(f"{'n':>4} " + " ".join(f"{name:>12}" for name, _ in solvers) + f" {'speedup':>9}  max|dw|")
    for n in args.sizes:
        g = rng.standard_normal((n, n))
        a = (g + g.T) / 2
        times = [best_time(fn, a, args.repeat) for _, fn in solvers]
        ref = np.linalg.eigvalsh(a)
        err = max(float(np.max(np.abs(np.sort(fn(a)[0]) - ref))) for name, fn in solvers[:-1])
        speed = times[-2] / times[0] if _jacobi_ext is not None else float("nan")
        print(f"{n:>4} " + " ".join(f"{t * 1e3:>10.3f}ms" for t in times) + f" {speed:>8.1f}x  {err:.1e}")
    if _jacobi_ext is None:
        print("compiled extension not built; only the python backend was timed")


if __name__ == "__main__":
    main()
