"""Time the numba kernels against their numpy twins on realistic inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from snakewalk import _accel, kernels, words
from snakewalk.bands import LINE, TREE, BandFunction, MomentumGrid
from snakewalk.states import band_coefficients


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def cases():
    grid = MomentumGrid(4096)
    n = 14
    band = BandFunction(LINE, n)
    gb = band.on_grid(grid)
    c = band_coefficients(grid, gb.phi, -4 * n, 4 * n)
    w = np.ascontiguousarray(words.line_weights(n))
    s = np.ascontiguousarray(words.offsets(n), dtype=np.int64)
    xs = np.arange(-3 * n, 3 * n + 1)
    small = MomentumGrid(256)
    tb = BandFunction(TREE, 10)
    tg = tb.on_grid(small)
    q = words.span_lengths(10).astype(float)
    tw = np.ascontiguousarray(words.tree_weights(10))
    ts = np.ascontiguousarray(words.offsets(10), dtype=np.int64)
    shift = int(np.abs(ts).max())
    return {
        "secular_roots (n=14, K=4096)": ((n, grid.nodes) + LINE.coeffs + (16 * (n + 1),)),
        "assemble (n=14, 85 layers)": (c, -4 * n, w, s, xs),
        "slice_norms (n=14, 85 layers)": (c, -4 * n, w, s, xs),
        "word_expectation (tree n=10, K=256)": (tg.phi, small.nodes, tw, ts, q, shift),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy path can run")
    print(f"{'kernel':40s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for label, inputs in cases().items():
        nb, npf = kernels.IMPLEMENTATIONS[label.split()[0]]
        t_np = best_of(lambda: npf(*inputs), args.repeat)
        if _accel.HAVE_NUMBA:
            nb(*inputs)     # compile
            t_nb = best_of(lambda: nb(*inputs), args.repeat)
            print(f"{label:40s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}")
        else:
            print(f"{label:40s} {'-':>10s} {t_np:10.4f} {'-':>8s}")


if __name__ == "__main__":
    main()
