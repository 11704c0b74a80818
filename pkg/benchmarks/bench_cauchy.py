"""Time the Cauchy-kernel sums of the compiled and the numpy backend.

Usage: python3 benchmarks/bench_cauchy.py [--h 0.02] [--repeat 3]

Sources are the samples of the unit disk, targets the samples of the disk of
radius 1.2, so near-cell corrections and far-field sums are both exercised.
"""

import argparse
import time

import numpy as np

from holopatch import _kernels_py
from holopatch.compacts import SetPrimitive, build_compact

try:
    from holopatch import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, default=0.02)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    h = args.h
    src = build_compact([SetPrimitive.disk(0, 1.0)], h)
    tgt = build_compact([SetPrimitive.disk(0, 1.2)], h).points
    dens = np.exp(src.points)
    near = 1.5 * h
    backends = {"python": _kernels_py}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    print(f"sources {len(src)}, targets {len(tgt)}, h = {h}")
    ref = None
    for name, mod in backends.items():
        t_sum, s = best_of(lambda: mod.cauchy_sum(src.points, dens, src.weights, tgt, h, near),
                           args.repeat)
        t_bnd, _ = best_of(lambda: mod.cauchy_rowsum_bound(src.points, np.abs(dens), src.weights,
                                                           tgt, h, near), args.repeat)
        diff = 0.0 if ref is None else float(np.abs(s - ref).max() / np.abs(ref).max())
        ref = s if ref is None else ref
        print(f"{name:>7}: cauchy_sum {t_sum:8.3f}s  rowsum_bound {t_bnd:8.3f}s  "
              f"rel. difference {diff:.2e}")
    if _ckernels is None:
        print("compiled backend unavailable; build with pip install -e . --no-build-isolation")


if __name__ == "__main__":
    main()
