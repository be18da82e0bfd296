#!/usr/bin/env python3
"""Compare the compiled kernel core against the pure-Python fallback.

Times the hot paths (basic litmus iterations, perpetual rounds, memory
stress line-rounds) on both backends and prints iterations per second.
"""

import argparse
import time

from disorder import backends
from disorder.litmus import build_test
from disorder.perpetual import PerpetualParams
from disorder.runner import BasicParams, run_basic
from disorder.stress import MemoryStressConfig, run_memory_stress


def available():
    out = [("purepy", backends.get_backend("purepy"))]
    if backends.HAVE_COMPILED:
        out.insert(0, ("compiled", backends.get_backend("compiled")))
    return out


def bench_basic(backend, iterations):
    test = build_test("SB")
    params = BasicParams(index_x=0, index_y=1024, iterations=iterations)
    t0 = time.perf_counter()
    run_basic(test, params, backend=backend)
    dt = time.perf_counter() - t0
    return iterations / dt


def bench_perpetual(backend, rounds):
    # raw log collection only; trace analysis is backend-independent
    params = PerpetualParams(index_x=0, index_y=1024, rounds=rounds)
    t0 = time.perf_counter()
    backend.run_perpetual_pair("SB", params)
    dt = time.perf_counter() - t0
    return rounds / dt


def bench_memory_stress(backend, max_rounds):
    cfg = MemoryStressConfig(num_threads=2, iterations_per_line=8)
    stop = backends.StopFlag()
    t0 = time.perf_counter()
    rounds = run_memory_stress(cfg, stop, max_rounds=max_rounds, backend=backend)
    dt = time.perf_counter() - t0
    return rounds / dt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--basic-iters", type=int, default=2000)
    ap.add_argument("--perpetual-rounds", type=int, default=200_000)
    ap.add_argument("--stress-rounds", type=int, default=50_000)
    args = ap.parse_args()

    rows = []
    for name, backend in available():
        scale = 1.0 if name == "compiled" else 0.02  # keep the fallback quick
        rows.append((
            name,
            bench_basic(backend, max(100, int(args.basic_iters * scale))),
            bench_perpetual(backend, max(1000, int(args.perpetual_rounds * scale))),
            bench_memory_stress(backend, max(200, int(args.stress_rounds * scale))),
        ))

    print(f"{'backend':<10} {'basic it/s':>14} {'perpetual rd/s':>16} {'stress rd/s':>14}")
    for name, basic, perp, stress in rows:
        print(f"{name:<10} {basic:>14,.0f} {perp:>16,.0f} {stress:>14,.0f}")
    if len(rows) == 2:
        print(f"\nspeedup (compiled/purepy): basic {rows[0][1] / rows[1][1]:.1f}x, "
              f"perpetual {rows[0][2] / rows[1][2]:.1f}x, "
              f"stress {rows[0][3] / rows[1][3]:.1f}x")


if __name__ == "__main__":
    main()
