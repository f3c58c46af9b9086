"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from repfn import kernels
from repfn.kernels import python as py

CASES = [
    ("enumerate (1,2,3) n=300", "enumerate_tuples", lambda: (np.array([1, 2, 3]), 300)),
    ("enumerate (1,1,1,1) n=80", "enumerate_tuples", lambda: (np.array([1, 1, 1, 1]), 80)),
    ("weights (1,2,3) n=300", "tuple_weight_sums", lambda: (np.array([1, 2, 3]), 300, np.full(301, 0.5), 18)),
    ("weights (1,1,1,1) n=60", "tuple_weight_sums", lambda: (np.array([1, 1, 1, 1]), 60, np.full(61, 0.5), 8)),
]


def _delta_case(n, m):
    a = py.enumerate_tuples(np.array([1, 1]), n)
    b = py.enumerate_tuples(np.array([1, 1]), m)
    return a, b, np.full(m + 1, 0.3)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled is None:
        print("compiled extension not available; only the fallback can run")
    cases = CASES + [("delta (1,1) n=2000 m=4000", "delta_sums", lambda: _delta_case(2000, 4000))]
    print(f"{'case':34s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    for label, name, make in cases:
        inputs = make()
        t_py = min(timeit.repeat(lambda: getattr(py, name)(*inputs), number=1, repeat=args.repeat))
        if kernels.compiled is not None:
            fn = getattr(kernels.compiled, name)
            t_c = min(timeit.repeat(lambda: fn(*inputs), number=1, repeat=args.repeat))
            print(f"{label:34s} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:8.1f}x")
        else:
            print(f"{label:34s} {t_py:10.4f} {'-':>11s}")


if __name__ == "__main__":
    main()
