"""Compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--samples 4096] [--gray-vars 20]

Times batch energy evaluation on an MD5 instance and on a random sparse
instance, and the Gray-code projection minimum on a random dense one. Both
backends must return identical arrays; a mismatch aborts.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from qubocomp import _kernels_py
from qubocomp.crypto_gen import CryptoJob, build
from qubocomp.qubo_model import QuboBuilder

try:
    from qubocomp import _kernels
except ImportError:
    _kernels = None


def random_instance(n: int, m: int, seed: int, cmax: int = 50):
    rng = np.random.default_rng(seed)
    b = QuboBuilder(n)
    for i in range(n):
        b.add_linear(i, int(rng.integers(-cmax, cmax + 1)))
    for _ in range(m):
        i, j = rng.choice(n, 2, replace=False)
        b.add_quadratic(int(i), int(j), int(rng.integers(-cmax, cmax + 1)))
    return b.build()


def best_of(fn, reps: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(reps):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_energy(name: str, q, samples: int, reps: int) -> dict:
    X = np.random.default_rng(1).integers(0, 2, size=(samples, q.num_vars), dtype=np.uint8)
    arrays = q.arrays()
    row = {"case": name, "kernel": "batch_energy", "vars": q.num_vars, "couplers": len(arrays[3]),
           "samples": samples}
    prep = _kernels_py.prepare_energy(*arrays)
    t_py, ref = best_of(lambda: _kernels_py.batch_energy_prepared(prep, q.offset, X), reps)
    row["python_s"] = round(t_py, 4)
    if _kernels is not None:
        prep_c = _kernels.prepare_energy(*arrays)
        t_c, got = best_of(lambda: _kernels.batch_energy_prepared(prep_c, q.offset, X), reps)
        if not np.array_equal(ref, got):
            raise SystemExit(f"{name}: backends disagree")
        row["cython_s"] = round(t_c, 4)
        row["speedup"] = round(t_py / t_c, 1)
    return row


def bench_gray(n: int, reps: int) -> dict:
    q = random_instance(n, 3 * n, seed=2)
    lin, _, _, _ = q.arrays()
    adj = q.adjacency()
    proj = np.full(n, -1, dtype=np.int32)
    proj[:4] = np.arange(4, dtype=np.int32)
    args = (n, lin, *adj, q.offset, proj, 4)
    row = {"case": f"random-{n}", "kernel": "gray_min_by_projection", "vars": n, "evaluations": 1 << n}
    t_py, ref = best_of(lambda: _kernels_py.gray_min_by_projection(*args), 1)
    row["python_s"] = round(t_py, 4)
    if _kernels is not None:
        t_c, got = best_of(lambda: _kernels.gray_min_by_projection(*args), reps)
        if not np.array_equal(ref, got):
            raise SystemExit("gray enumeration: backends disagree")
        row["cython_s"] = round(t_c, 4)
        row["speedup"] = round(t_py / t_c, 1)
    return row


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=4096)
    ap.add_argument("--gray-vars", type=int, default=20)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; reporting the fallback only")
    md5 = build(CryptoJob.from_witness("md5", bytes(range(55)))).qubo
    rows = [
        bench_energy("md5", md5, args.samples, args.reps),
        bench_energy("random-2000", random_instance(2000, 20000, seed=3), args.samples, args.reps),
        bench_gray(args.gray_vars, args.reps),
    ]
    for r in rows:
        print(json.dumps(r))


if __name__ == "__main__":
    main()
