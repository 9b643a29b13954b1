"""Benchmark the compiled walk kernel against the pure-Python fallback.

Run as ``python -m rwreld.benchmark [--steps N]``.  Reports steps/second for
the quenched and lazy-environment kernels on both backends and the speedup.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import _walkcore_py
from .envmodel import EnvDistribution
from .rngtools import subseed_array

try:
    from . import _walkcore
    _BACKENDS = [_walkcore, _walkcore_py]
except ImportError:
    _BACKENDS = [_walkcore_py]


def _bench_quenched(mod, n_steps: int) -> float:
    thresh = np.where(np.arange(4001) % 2 == 0, 0.25, 0.75)
    seeds = subseed_array(12345, np.arange(1))
    oc = np.zeros(1, np.int8)
    st = np.zeros(1, np.uint64)
    fp = np.zeros(1, np.int64)
    t0 = time.perf_counter()
    # no absorbing targets: runs exactly n_steps (cap) unless exhausted
    mod.run_hit_quenched(thresh, -2000, 0, -3000, 3000, 0, 0, n_steps,
                         seeds, oc, st, fp, 0, 1)
    dt = time.perf_counter() - t0
    return int(st[0]) / dt


def _bench_lazy(mod, n_steps: int) -> float:
    dist = EnvDistribution.two_point(0.25)
    code, p1, p2, sup, cumw = dist.kernel_args()
    es = subseed_array(7, np.arange(1))
    ws = subseed_array(8, np.arange(1))
    exh = np.zeros(1, np.int8)
    pos = np.zeros(1, np.int64)
    buf = np.full(8001, np.nan)
    t0 = time.perf_counter()
    mod.run_position_lazy(code, p1, p2, sup, cumw, es, ws, 4000, n_steps,
                          buf, exh, pos, 0, 1)
    dt = time.perf_counter() - t0
    return n_steps / dt


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2_000_000,
                    help="steps for the compiled backend (the pure backend "
                         "gets 1/20 of this)")
    args = ap.parse_args()
    results = {}
    for mod in _BACKENDS:
        steps = args.steps if mod.BACKEND == "cython" else args.steps // 20
        results[mod.BACKEND] = (_bench_quenched(mod, steps),
                                _bench_lazy(mod, steps))
    print(f"{'backend':<10} {'quenched steps/s':>18} {'lazy steps/s':>15}")
    for name, (q, z) in results.items():
        print(f"{name:<10} {q:>18.3e} {z:>15.3e}")
    if len(results) == 2:
        q_speedup = results["cython"][0] / results["python"][0]
        z_speedup = results["cython"][1] / results["python"][1]
        print(f"speedup    {q_speedup:>18.1f}x {z_speedup:>14.1f}x")


if __name__ == "__main__":
    main()
