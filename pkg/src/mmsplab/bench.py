"""Benchmark the numba-jitted finite-field kernels against the pure-numpy
fallback.

Run as `python -m mmsplab.bench`.  The fallback is forced for the second
column by re-executing this module in a subprocess with
MMSPLAB_PURE_NUMPY=1, so both paths are measured in otherwise identical
conditions.  Workloads mirror the package's hot loops: batched rank
computations, brute-force MDS verification, and the exhaustive share
histogram used by the protocol audits.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads():
    from . import _accel
    from .fields import field_build

    ctx = field_build(3, 1)
    t = ctx.tables()
    rng = np.random.default_rng(42)

    def bench_rank():
        mats = rng.integers(0, 3, size=(4000, 6, 4)).astype(np.int64)
        acc = 0
        for m in mats:
            acc += _accel.gf_rank(m.copy(), t)
        return acc

    def bench_mds():
        acc = 0
        for _ in range(300):
            m = rng.integers(0, 3, size=(10, 4)).astype(np.int64)
            acc += int(_accel.gf_is_mds(m, 4, t))
        return acc

    def bench_hist():
        g = rng.integers(0, 3, size=(6, 4)).astype(np.int64)
        f = rng.integers(0, 3, size=(6, 2)).astype(np.int64)
        acc = 0
        for _ in range(8):
            acc += int(_accel.gf_share_hist(g, f, t).sum())
        return acc

    return [("rank 6x4 x4000", bench_rank),
            ("mds (10,4) x300", bench_mds),
            ("share-hist 3^6 x8", bench_hist)]


def run_suite() -> dict:
    from . import _accel

    results = {"backend": _accel.backend_name()}
    for name, fn in _workloads():
        fn()  # warm-up (JIT compilation happens here on the numba path)
        t0 = time.perf_counter()
        fn()
        results[name] = time.perf_counter() - t0
    return results


def main() -> int:
    mine = run_suite()
    print(f"[{mine['backend']}]")
    for k, v in mine.items():
        if k != "backend":
            print(f"  {k:24s} {v * 1e3:9.2f} ms")
    if os.environ.get("MMSPLAB_PURE_NUMPY") == "1":
        return 0
    env = dict(os.environ, MMSPLAB_PURE_NUMPY="1", MMSPLAB_BENCH_JSON="1")
    out = subprocess.run([sys.executable, "-m", "mmsplab.bench"],
                         capture_output=True, text=True, env=env)
    try:
        other = json.loads(out.stdout.splitlines()[-1])
    except (json.JSONDecodeError, IndexError):
        print(out.stdout)
        print("fallback run failed", file=sys.stderr)
        return 1
    print(f"[{other['backend']}]")
    speedups = []
    for k, v in other.items():
        if k != "backend":
            print(f"  {k:24s} {v * 1e3:9.2f} ms   "
                  f"(x{v / mine[k]:.1f} vs {mine['backend']})")
            speedups.append(v / mine[k])
    print(f"geometric-mean speedup: x{np.prod(speedups) ** (1 / len(speedups)):.1f}")
    return 0


if __name__ == "__main__":
    if os.environ.get("MMSPLAB_BENCH_JSON") == "1":
        print(json.dumps(run_suite()))
        raise SystemExit(0)
    raise SystemExit(main())
