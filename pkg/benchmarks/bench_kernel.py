#!/usr/bin/env python3
"""Time the compiled Lax-Friedrichs march against the numpy fallback.

Usage: python3 benchmarks/bench_kernel.py [--cells 250 500 1000 2000] [--steps 2000] [--out bench.csv]

Both backends march the same state with the same step count; the script
also records the max difference of the results, which should be at round-off.
"""

import argparse
import csv
import sys
import time

import numpy as np

from tdflux import _backend
from tdflux.traffic import TrafficScenario, run_scenario


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_advance(n_cells, n_steps, repeat):
    rng = np.random.default_rng(n_cells)
    u0 = rng.uniform(0.0, 1.0, n_cells)
    lam, a, b = 0.45, 1.0, -1.0  # g(u) = u - u^2, Courant number 0.45 on [0, 1]
    rows = []
    results = {}
    for name, fn in (("python", _backend.advance_py), ("cython", _backend.advance_compiled)):
        if fn is None:
            continue

        def go(fn=fn):
            u = u0.copy()
            fn(u, n_steps, lam, a, b, 0.3, 0.9, False)
            return u

        sec, u = _time(go, repeat)
        results[name] = u
        rows.append({"case": "advance", "backend": name, "n_cells": n_cells, "n_steps": n_steps, "seconds": sec})
    diff = float(np.abs(results["python"] - results["cython"]).max()) if len(results) == 2 else float("nan")
    for r in rows:
        r["max_abs_diff"] = diff
    return rows


def bench_traffic(n_cells, repeat):
    rows = []
    finals = {}
    for name in ("python", "cython"):
        if name == "cython" and _backend.advance_compiled is None:
            continue
        sec, (_, fld) = _time(lambda: run_scenario(TrafficScenario(), n_cells, backend=name), repeat)
        finals[name] = fld.profiles
        rows.append(
            {"case": "traffic", "backend": name, "n_cells": n_cells, "n_steps": fld.diagnostics.n_steps, "seconds": sec}
        )
    diff = float(np.abs(finals["python"] - finals["cython"]).max()) if len(finals) == 2 else float("nan")
    for r in rows:
        r["max_abs_diff"] = diff
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--traffic-cells", type=int, default=500)
    ap.add_argument("--out", default=None, help="CSV path (default: stdout)")
    args = ap.parse_args(argv)

    if _backend.advance_compiled is None:
        print("compiled kernel not built; timing the numpy fallback only", file=sys.stderr)
    rows = []
    for n in args.cells:
        rows += bench_advance(n, args.steps, args.repeat)
    rows += bench_traffic(args.traffic_cells, 1)

    fields = ["case", "backend", "n_cells", "n_steps", "seconds", "max_abs_diff"]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=fields)
    w.writeheader()
    w.writerows(rows)
    if args.out:
        fh.close()

    by = {(r["case"], r["n_cells"], r["backend"]): r["seconds"] for r in rows}
    for case, n in sorted({(r["case"], r["n_cells"]) for r in rows}):
        if (case, n, "cython") in by:
            print(f"{case:8s} n={n:5d} speedup {by[(case, n, 'python')] / by[(case, n, 'cython')]:6.1f}x", file=sys.stderr)


if __name__ == "__main__":
    main()
