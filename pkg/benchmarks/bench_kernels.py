"""Time the compiled kernels against their pure-Python counterparts.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np
import scipy.sparse as sp

from echoscope import _kernels as cy
from echoscope import _kernels_py as py


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def random_graph(n, avg_degree, seed):
    rng = np.random.default_rng(seed)
    m = int(n * avg_degree)
    src, dst = rng.integers(0, n, m), rng.integers(0, n, m)
    keep = src != dst
    g = sp.csr_matrix((np.ones(keep.sum()), (src[keep], dst[keep])), shape=(n, n))
    g.sum_duplicates()
    t = g.T.tocsr()
    return g.indptr, g.indices, t.indptr, t.indices


def cases():
    rng = np.random.default_rng(0)
    bimodal = np.sort(np.concatenate([rng.normal(-2, 1, 5000), rng.normal(2, 1, 5000)]))
    small = np.sort(rng.normal(size=1000))
    graph = random_graph(3000, 4, 1)
    return [
        ("dip_sorted n=10000", lambda k: k.dip_sorted(bimodal)),
        ("dip_jackknife_sorted n=1000", lambda k: k.dip_jackknife_sorted(small)),
        ("ci_adaptive n=3000 radius=2 top_k=100", lambda k: k.ci_adaptive(*graph, 2, 100)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'kernel':40s} {'cython (s)':>11s} {'python (s)':>11s} {'speedup':>8s}")
    for name, run in cases():
        tc = best_of(lambda: run(cy), args.repeat)
        tp = best_of(lambda: run(py), args.repeat)
        print(f"{name:40s} {tc:11.4f} {tp:11.4f} {tp / tc:7.0f}x")


if __name__ == "__main__":
    main()
