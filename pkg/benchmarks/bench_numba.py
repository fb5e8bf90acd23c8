"""Compare compiled and pure-Python integration kernels on the default sweep.

Each mode runs in a fresh interpreter because the backend is chosen at import
time from ``KLEINX_NUMBA``.  Usage::

    python3 benchmarks/bench_numba.py [--steps N]
"""
import argparse
import csv
import io
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
t0 = time.perf_counter()
from kleinx import sweep
from kleinx.acceptance import warmup
warmup()
t1 = time.perf_counter()
steps = int(sys.argv[1])
rep = sweep.run_sweep(None, None, steps) if steps == 999 else sweep.run_sweep(0.01, 0.86, steps)
t2 = time.perf_counter()
print(json.dumps({"warmup_s": t1 - t0, "sweep_s": t2 - t1,
                  "csv": sweep.sweep_csv(rep.records)}))
"""


def run(flag, steps):
    env = dict(os.environ, KLEINX_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", CHILD, str(steps)], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=999)
    args = ap.parse_args()
    fast = run("1", args.steps)
    slow = run("0", args.steps)
    print(f"{'backend':<8} {'import+warmup':>14} {'sweep':>10}")
    for name, r in (("numba", fast), ("python", slow)):
        print(f"{name:<8} {r['warmup_s']:13.2f}s {r['sweep_s']:9.2f}s")
    print(f"speedup on sweep: {slow['sweep_s'] / fast['sweep_s']:.1f}x")
    a = list(csv.reader(io.StringIO(fast["csv"])))[1:]
    b = list(csv.reader(io.StringIO(slow["csv"])))[1:]
    diff = max(abs(float(x) - float(y)) for ra, rb in zip(a, b) for x, y in zip(ra[:6], rb[:6]))
    same = sum(ra == rb for ra, rb in zip(a, b))
    print(f"rows identical: {same}/{len(a)}; max abs difference {diff:.2e}")


if __name__ == "__main__":
    main()
