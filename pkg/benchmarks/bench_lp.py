"""Benchmark the compiled LP kernel against the pure NumPy fallback.

Two workloads:
  * a batch of random bounded LPs (small, solver-bound),
  * repeated 39-bus dispatch solves, the hot loop of a contingency sweep.

Usage: python benchmarks/bench_lp.py [--samples N] [--lps N]
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gridrisk import lp
from gridrisk.caseio import load_case
from gridrisk.dcopf import OpfTemplate
from gridrisk.model import intact_state
from gridrisk.sampler import default_spec, draw_samples

FIXTURE = os.path.join(os.path.dirname(__file__), "..", "src", "gridrisk",
                       "fixtures", "case39.grid")


def random_lps(count, seed=123):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(4, 12))
        m = int(rng.integers(1, min(n, 6)))
        a = rng.normal(0, 1, (m, n))
        lo = rng.uniform(-5, 0, n)
        hi = lo + rng.uniform(0.5, 6, n)
        c = rng.normal(0, 2, n)
        b = a @ rng.uniform(lo, hi)
        out.append((c, a, b, lo, hi))
    return out


def bench_random(kernel, instances):
    start = time.perf_counter()
    acc = 0.0
    for c, a, b, lo, hi in instances:
        status, _, obj, _, _, _, _ = kernel(c, a, b, lo, hi)
        if status == lp.OPTIMAL:
            acc += obj
    return time.perf_counter() - start, acc


def bench_opf(kernel, samples, island):
    # call the kernel directly on pre-patched island problems
    patched = []
    for s in samples:
        demand = np.asarray([s.load_p[d.id] for d in island.loads]) / 100.0
        b, upper = island.patch(demand, s.wind_avail)
        patched.append((b, upper))
    start = time.perf_counter()
    acc = 0.0
    iters = 0
    for b, upper in patched:
        status, _, obj, it, _, _, _ = kernel(
            island.c, island.a_eq, b, island.lower0, upper,
            basis0=island.basis0, vstatus0=island.vstatus0)
        assert status == lp.OPTIMAL
        acc += obj
        iters += it
    return time.perf_counter() - start, acc, iters


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=300,
                        help="39-bus dispatch solves per backend")
    parser.add_argument("--lps", type=int, default=400,
                        help="random LPs per backend")
    args = parser.parse_args()

    backends = lp.available_backends()
    print(f"backends available: {', '.join(backends)} "
          f"(active: {lp.backend_name()})\n")

    instances = random_lps(args.lps)
    print(f"-- {args.lps} random bounded LPs --")
    base_time = None
    for name, kernel in backends.items():
        dt, acc = bench_random(kernel, instances)
        rate = args.lps / dt
        speedup = "" if base_time is None else f"  ({base_time / dt:.1f}x)"
        base_time = base_time or dt
        print(f"{name:>8}: {dt:8.3f} s  {rate:9.0f} solves/s  "
              f"checksum {acc:.6e}{speedup}")

    network = load_case(FIXTURE)
    samples = draw_samples(default_spec(network), 1, args.samples)
    template = OpfTemplate(intact_state(network))
    island = template.island_lps[0]
    n, m = island.c.shape[0], island.a_eq.shape[0]
    print(f"\n-- {args.samples} dispatch solves on the 39-bus core island "
          f"(n={n}, m={m}) --")
    base_time = None
    checksums = {}
    for name, kernel in backends.items():
        dt, acc, iters = bench_opf(kernel, samples, island)
        rate = args.samples / dt
        speedup = "" if base_time is None else f"  ({base_time / dt:.1f}x)"
        base_time = base_time or dt
        checksums[name] = acc
        print(f"{name:>8}: {dt:8.3f} s  {rate:9.0f} solves/s  "
              f"{iters / args.samples:6.1f} iters/solve  "
              f"{dt / args.samples * 1000:6.2f} ms/solve{speedup}")
    values = list(checksums.values())
    if len(values) == 2:
        gap = abs(values[0] - values[1]) / max(1.0, abs(values[0]))
        print(f"\nobjective checksum relative gap between backends: {gap:.2e}")


if __name__ == "__main__":
    main()
