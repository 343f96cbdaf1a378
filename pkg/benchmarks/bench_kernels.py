"""Compare the numba and numpy simplex kernels.

Part 1 times each kernel pair directly on random tableaus of a few sizes.
Part 2 solves the same LPs end to end in two subprocesses, one with
``HUBPLAN_DISABLE_NUMBA=1``, so the dispatch in ``engine._kernels`` is
exercised the way users see it.

    python benchmarks/bench_kernels.py [--repeat N] [--sizes 40,120,300]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from hubplan.engine import _kernels as K


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_kernels(sizes, repeat: int) -> list[tuple[str, int, float, float]]:
    rng = np.random.default_rng(0)
    rows = []
    for m in sizes:
        n = 2 * m
        T0 = rng.normal(size=(m, n))
        d0 = rng.normal(size=n)
        r, q = m // 2, n // 3
        T0[r, q] = 3.0

        def run_pivot(kernel):
            # pivot on a fresh copy each call: a repeated pivot is nearly a no-op
            return lambda: kernel(T0.copy(), d0.copy(), r, q)

        status = rng.integers(0, 4, n).astype(np.int64)
        lo = np.zeros(n)
        hi = np.full(n, 5.0)
        allowed = np.ones(n, dtype=np.bool_)
        xB = rng.uniform(0, 5, m)
        loB = np.zeros(m)
        hiB = np.full(m, 5.0)
        dxB = rng.normal(size=m)
        basis = np.arange(m, dtype=np.int64)
        alpha = rng.normal(size=n)

        cases = {
            "pivot": (run_pivot(K.pivot_np), run_pivot(K.pivot_nb)),
            "choose_entering": (
                lambda: K.choose_entering_np(d0, status, lo, hi, allowed, 1e-9, False),
                lambda: K.choose_entering_nb(d0, status, lo, hi, allowed, 1e-9, False)),
            "primal_ratio": (
                lambda: K.primal_ratio_np(xB, loB, hiB, dxB, basis, 1e-9, 1e-9, False),
                lambda: K.primal_ratio_nb(xB, loB, hiB, dxB, basis, 1e-9, 1e-9, False)),
            "choose_leaving": (
                lambda: K.choose_leaving_np(xB - 1.0, loB, hiB, basis, 1e-9, False),
                lambda: K.choose_leaving_nb(xB - 1.0, loB, hiB, basis, 1e-9, False)),
            "dual_ratio": (
                lambda: K.dual_ratio_np(alpha, d0, status, lo, hi, allowed, 1.0, 1e-9),
                lambda: K.dual_ratio_nb(alpha, d0, status, lo, hi, allowed, 1.0, 1e-9)),
        }
        for name, (f_np, f_nb) in cases.items():
            f_nb()  # compile outside the timing
            rows.append((name, m, _best_of(f_np, repeat), _best_of(f_nb, repeat)))
    return rows


_SOLVE_SCRIPT = r"""
import json, sys, time
import numpy as np
from hubplan.engine import BACKEND, LinExpr, Model, solve_lp

m, n, count = (int(a) for a in sys.argv[1:4])
rng = np.random.default_rng(1)
models = []
for _ in range(count):
    A = rng.uniform(0, 1, (m, n))
    M = Model()
    for j in range(n):
        M.add_var(ub=10.0)
    for i in range(m):
        M.add_constr(LinExpr({j: A[i, j] for j in range(n)}), "<=", float(rng.uniform(5, 20)))
    M.set_objective(LinExpr({j: -float(rng.uniform(1, 2)) for j in range(n)}))
    models.append(M)
solve_lp(models[0])  # warm up (numba compile / cache load)
t = time.perf_counter()
objs = [solve_lp(M).objective for M in models]
print(json.dumps({"backend": BACKEND, "seconds": time.perf_counter() - t, "objs": objs}))
"""


def bench_solves(m: int, n: int, count: int) -> dict[str, dict]:
    out = {}
    for disable in ("0", "1"):
        env = dict(os.environ, HUBPLAN_DISABLE_NUMBA=disable)
        proc = subprocess.run([sys.executable, "-c", _SOLVE_SCRIPT, str(m), str(n), str(count)],
                              env=env, capture_output=True, text=True, check=True)
        res = json.loads(proc.stdout.strip().splitlines()[-1])
        out[res["backend"]] = res
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sizes", default="40,120,300")
    ap.add_argument("--lp-size", default="60x120")
    ap.add_argument("--lp-count", type=int, default=10)
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'kernel':<16} {'rows':>5} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for name, m, t_np, t_nb in bench_kernels(sizes, args.repeat):
        print(f"{name:<16} {m:>5} {t_np * 1e6:>10.1f} {t_nb * 1e6:>10.1f} {t_np / t_nb:>8.2f}")

    m, n = (int(v) for v in args.lp_size.split("x"))
    res = bench_solves(m, n, args.lp_count)
    print(f"\n{args.lp_count} dense LPs of {m}x{n}:")
    for backend, r in res.items():
        print(f"  {backend:<6} {r['seconds']:.3f} s")
    if len(res) == 2:
        a, b = (np.array(r["objs"]) for r in res.values())
        print(f"  max objective difference {np.max(np.abs(a - b)):.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
