"""Compare the compiled and numpy interval kernels.

Usage: python3 benchmarks/bench_kernels.py [--sizes 8 16 32] [--repeat 5]

Times the three kernels on random data at each size, checks that both
backends return bit-identical results, and runs one end-to-end certificate
per backend (in a subprocess, since the backend is chosen at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from timingcert.interval import _pykernels

try:
    from timingcert.interval import _ckernels
except ImportError:
    _ckernels = None

_E2E = """
import time
from timingcert.interval import BACKEND
from timingcert.synth import lyapunov_P
from timingcert.decomp import decompose
from timingcert.systems import four_axis, block_diagonal
from timingcert.verify import certify
sys = block_diagonal(four_axis(), four_axis())
dec = decompose(sys)
K = lyapunov_P(dec.A_nominal, 0.99).K
t = time.perf_counter()
certify(sys, K, dec=dec, dense=True)
print(BACKEND, time.perf_counter() - t)
"""


def _inputs(rng, n):
    A = rng.normal(size=(n, n))
    r = rng.uniform(0.0, 1e-9, size=(n, n))
    X = rng.normal(size=(n, n))
    P = X @ X.T + n * np.eye(n)
    L = np.tril(rng.normal(size=(n, n))) + 3.0 * np.eye(n)
    tri = np.tri(n)
    return {
        "matmul": (A - r, A + r, A - r, A + r),
        "cholesky": (P - 1e-12, P + 1e-12),
        "lower_inverse": (L - r * tri, L + r * tri),
    }


def _same(a, b):
    return all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-e2e", action="store_true", help="skip the end-to-end run")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the numpy backend is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'n':>4}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}  identical")
    for n in args.sizes:
        for name, inp in _inputs(rng, n).items():
            fp = getattr(_pykernels, name)
            tp = min(timeit.repeat(lambda: fp(*inp), number=1, repeat=args.repeat))
            if _ckernels is None:
                print(f"{name:<14}{n:>4}{tp * 1e3:>14.3f}{'-':>14}{'-':>10}  -")
                continue
            fc = getattr(_ckernels, name)
            tc = min(timeit.repeat(lambda: fc(*inp), number=1, repeat=args.repeat))
            same = _same(fp(*inp), fc(*inp))
            print(f"{name:<14}{n:>4}{tp * 1e3:>14.3f}{tc * 1e3:>14.3f}{tp / tc:>9.1f}x  {same}")
    if args.no_e2e:
        return 0
    print("\nend-to-end dense certificate, n = 32:")
    for env in ({"TIMINGCERT_PURE_PYTHON": "1"}, {}):
        e = dict(os.environ)
        e.pop("TIMINGCERT_PURE_PYTHON", None)
        e.update(env)
        out = subprocess.run([sys.executable, "-c", _E2E], env=e, capture_output=True, text=True)
        if out.returncode:
            print(out.stderr.strip())
            continue
        backend, secs = out.stdout.split()
        print(f"  {backend:<8} {float(secs):8.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
