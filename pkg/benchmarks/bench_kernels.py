"""Time the sigma_min grid kernel on the numba and numpy backends.

    python benchmarks/bench_kernels.py [--points 4000] [--repeat 5]
"""
import argparse
import math
import statistics
import time

import numpy as np

from qgraph import _kernels, decorate, decorate_periodic, make_graph, make_spider
from qgraph.secular import layout


def k5():
    verts = [f"v{i}" for i in range(5)]
    return make_graph(verts, [(f"e{i}{j}", verts[i], verts[j], 1.0) for i in range(5) for j in range(i + 1, 5)])


def cases():
    lattice = make_graph(["o"], [("x", "o", "o", 1.0, (1, 0)), ("y", "o", "o", 1.0, (0, 1))], period_rank=2)
    yield "K5 (20x20)", layout(k5()).kernel_args()
    yield "K5+spider (60x60)", layout(decorate(k5(), make_spider(4, 2 / 3))).kernel_args()
    yield "Z2+spider Bloch (12x12, complex)", layout(decorate_periodic(lattice, make_spider(4, 2 / 3))).kernel_args(
        np.array([0.3, 1.7]))


def timed(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=4000)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    ks = np.linspace(0.5, 8 * math.pi, a.points)
    print(f"{'case':36s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, args in cases():
        t_np = timed(lambda: _kernels.sigma_min_grid_numpy(ks, *args), a.repeat)
        if _kernels.HAS_NUMBA:
            t_nb = timed(lambda: _kernels.sigma_min_grid_numba(ks, *args), a.repeat)
            diff = np.max(np.abs(_kernels.sigma_min_grid_numpy(ks, *args) - _kernels.sigma_min_grid_numba(ks, *args)))
            print(f"{name:36s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.2f}   max |diff| {diff:.1e}")
        else:
            print(f"{name:36s} {t_np:10.4f} {'n/a':>10s}")


if __name__ == "__main__":
    main()
