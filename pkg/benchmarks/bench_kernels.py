"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 256 1024 4096] [--repeat 3]
"""
import argparse
import time

import numpy as np

from fracvolterra.kernels import available_backends, get_backend
from fracvolterra.mesh import build_graded_mesh
from fracvolterra.problems import make_sharpness

ALPHA = 0.5


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, repeat):
    mesh = build_graded_mesh(100.0, n, 2.0 / ALPHA)
    t = np.ascontiguousarray(mesh.nodes)
    problem = make_sharpness(1.0, ALPHA, 0.2, 6.0, 0.1)
    coefs, exps = problem.forcing_terms(t)
    rows = {}
    for name in available_backends():
        k = get_backend(name)
        packed = np.asarray(k.weight_matrix(t, ALPHA))
        f = np.ones(n + 1)
        rows[name] = {
            "weight_matrix": best_of(lambda: k.weight_matrix(t, ALPHA), repeat),
            "packed_matvec": best_of(lambda: k.packed_matvec(packed, f), repeat),
            "march": best_of(lambda: k.march(t, ALPHA, 1.0, coefs, exps, 1e-14, 1e-13, 100, packed), repeat),
        }
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'N':>6} {'kernel':<14}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        rows = bench(n, args.repeat)
        for kernel in ("weight_matrix", "packed_matvec", "march"):
            times = [rows[b][kernel] for b in backends]
            speed = rows["python"][kernel] / rows["cython"][kernel] if "cython" in rows else float("nan")
            print(f"{n:>6} {kernel:<14}" + "".join(f"{x * 1e3:>10.2f}ms" for x in times) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
