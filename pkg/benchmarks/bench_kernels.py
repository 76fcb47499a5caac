"""Compiled kernels against their pure-Python twins.

    python3 benchmarks/bench_kernels.py [--events 200000] [--repeat 3] [--json out.json]

Each row times one kernel on identical inputs under both backends and
checks that the outputs agree.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from meteor._backend import get_kernels
from meteor.events import EventStream
from meteor.graph import build_complete, build_cycle, build_torus, uniform_redistribution


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _apply_case(g, n_events, seed=1):
    P = uniform_redistribution(g)
    times, verts = EventStream(g.vertex_count, seed).take(n_events)

    def run(kern):
        m = np.ones(g.vertex_count)
        lh = np.zeros(g.vertex_count)
        kern.apply_events(m, lh, times, verts, g.indptr, g.indices, P.weights)
        return m
    return run


def _coupled_case(g, n_events, seed=2):
    P = uniform_redistribution(g)
    times, verts = EventStream(g.vertex_count, seed).take(n_events)
    k = g.vertex_count
    a0 = np.zeros(k)
    a0[0] = k
    b0 = np.zeros(k)
    b0[k // 2] = k

    def run(kern):
        a, b = a0.copy(), b0.copy()
        dout = np.empty(n_events)
        kern.coupled_events(a, b, np.zeros(k), times, verts, g.indptr, g.indices, P.weights,
                            dout, float(np.abs(a - b).sum()), 0, 0)
        return a - b
    return run


def _worm_case(g, n_events, seed=3):
    P = uniform_redistribution(g)
    unif = np.random.default_rng(seed).random(n_events)

    def run(kern):
        m = np.full(g.vertex_count, 1.0 / g.vertex_count)
        kern.worm_steps(m, 0, unif, g.indptr, g.indices, P.weights)
        return m
    return run


def _complete_case(k, n_events, seed=4):
    times, verts = EventStream(k, seed).take(n_events)

    def run(kern):
        off = np.zeros(k)
        base = kern.complete_events(off, np.zeros(k), times, verts, 1.0)
        return off + base
    return run


def _descent_case(m):
    def run(kern):
        return np.asarray(kern.descent_counts(m))
    return run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the rows as JSON")
    args = ap.parse_args(argv)
    n = args.events
    cases = [
        ("apply_events cycle(2000)", _apply_case(build_cycle(2000), n), n),
        ("apply_events torus(40,2)", _apply_case(build_torus(40, 2), n), n),
        ("coupled_events cycle(200)", _coupled_case(build_cycle(200), n), n),
        ("worm_steps torus(20,2)", _worm_case(build_torus(20, 2), n), n),
        ("complete_events k=1024", _complete_case(1024, n), n),
        ("apply_events complete(64)", _apply_case(build_complete(64), n // 10), n // 10),
        ("descent_counts m=10", _descent_case(10), 1),
    ]
    fast, slow = get_kernels("cython"), get_kernels("python")
    rows = []
    print(f"{'kernel':30s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, run, count in cases:
        tc, oc = _best(lambda: run(fast), args.repeat)
        tp, op = _best(lambda: run(slow), 1)
        diff = float(np.max(np.abs(np.asarray(oc, dtype=float) - np.asarray(op, dtype=float))))
        rows.append({"kernel": name, "events": count, "cython_s": tc, "python_s": tp,
                     "speedup": tp / tc, "max_abs_diff": diff})
        print(f"{name:30s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f} {diff:10.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
