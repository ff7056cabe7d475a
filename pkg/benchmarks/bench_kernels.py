"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --dims 2 8 32 --n 10000
"""

import argparse
import json
import sys
import timeit

import numpy as np

from lipcert import _backend


def cases(rng, d, n):
    G = rng.uniform(-1, 1, (d, d))
    M = np.ascontiguousarray(G.T @ G)
    L = np.ascontiguousarray(np.linalg.cholesky(M + 1e-12 * np.eye(d)).T)
    X1, X2, Y1, Y2 = (np.ascontiguousarray(rng.uniform(-1, 1, (n, d))) for _ in range(4))
    v0 = rng.standard_normal(d)
    return {
        "cholesky_upper": (M, 1e-10, 1e-9),
        "power_iteration": (np.ascontiguousarray(G), v0, 1e-10, 10_000),
        "mahalanobis_slopes": (L, X1, X2, Y1, Y2),
        "bilinear_slopes": (G, X1, X2, Y1, Y2),
        "mahalanobis_grad_norms": (M, L, X1, X2, 1e-12),
        "bilinear_grad_norms": (G, X1, X2),
    }


def bench(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--dims", type=int, nargs="+", default=[2, 8, 32])
    parser.add_argument("--n", type=int, default=10_000, help="batch size for the batched kernels")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = parser.parse_args(argv)

    if _backend.compiled is None:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    rows = []
    for d in args.dims:
        for name, kargs in cases(rng, d, args.n).items():
            t_py = bench(getattr(_backend.python, name), kargs, args.repeat)
            t_cy = bench(getattr(_backend.compiled, name), kargs, args.repeat)
            rows.append({"kernel": name, "dim": d, "python_s": t_py, "cython_s": t_cy, "speedup": t_py / t_cy})

    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    print(f"{'kernel':<24}{'d':>4}{'python':>12}{'cython':>12}{'speedup':>9}")
    for r in rows:
        print(f"{r['kernel']:<24}{r['dim']:>4}{r['python_s'] * 1e3:>10.3f}ms{r['cython_s'] * 1e3:>10.3f}ms"
              f"{r['speedup']:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
