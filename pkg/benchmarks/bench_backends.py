"""Time the numba and numpy site-propagation backends on Q-operator builds.

    python benchmarks/bench_backends.py [--M 6 8] [--repeat 3]

Both backends are called through the ``which`` argument, so QAUX_BACKEND
does not need to change between runs.  The first numba call (compilation)
is excluded.
"""
import argparse
import time

import numpy as np

from qaux.operators import q_mu, q_trunc, transfer_t
from qaux.reps import make_params


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--M", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--K", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"{'case':28s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for M in args.M:
        root = make_params(M, np.exp(2j * np.pi / 3), 0.8 + 0.1j)
        gen = make_params(M, np.exp(0.53j), 0.5)
        cases = {
            f"T          M={M}": lambda w, p=root: transfer_t(p, 0.4 + 0.3j, which=w).mat,
            f"Q_mu N=3   M={M}": lambda w, p=root: q_mu(p, 0.7 + 0.2j, 0.4 + 0.3j, which=w).mat,
            f"Q_trunc K={args.K} M={M}": lambda w, p=gen: q_trunc(p, 0.8, 1.3, 0.4 + 0.3j, args.K, which=w).mat,
        }
        for name, build in cases.items():
            ref = build("numba")  # compile
            diff = float(np.max(np.abs(ref - build("numpy"))))
            tn = best_of(lambda: build("numpy"), args.repeat)
            tb = best_of(lambda: build("numba"), args.repeat)
            print(f"{name:28s} {tn:10.4f} {tb:10.4f} {tn / tb:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
