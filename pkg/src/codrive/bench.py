"""Benchmark the compiled rollout kernel against its pure-Python twin."""
from __future__ import annotations

import time

import numpy as np

from . import _kernels
from ._kernels import pure


def _workload():
    upper = np.array([[0.0, 5.625], [40.0, 5.625], [60.0, 4.6], [75.0, 2.0]])
    lower = np.array([[0.0, 0.0], [55.0, 0.0], [75.0, 2.0]])
    kwargs = dict(
        x0=(10.0, 1.875, 0.0, 15.0, 0.0, 0.0),
        dt=0.05,
        hp=10,
        hc=3,
        veh=(1.21, 1.05, 2000.0, 1300.0, 80000.0, 80000.0),
        road=(0, 0.0, 0.0, 10.0),
        ref=(1.875, 12.0),
        weights=(0.01, 0.6, 1.0, 0.02, 0.1, 60.0, 1000.0),
        apf=(30.0, 1.0, 1.8),
        upper=upper,
        lower=lower,
        s_end=75.0,
    )
    u = np.array([0.5, 0.01, -0.25, 0.005, 0.1, -0.002])
    return kwargs, u


def _time_backend(backend, kwargs, u, repeats: int) -> tuple[float, float]:
    ctx = backend.make_cost_context(**kwargs)
    cost = backend.rollout_cost(ctx, u)
    start = time.perf_counter()
    for _ in range(repeats):
        backend.rollout_cost(ctx, u)
    elapsed = time.perf_counter() - start
    return cost, elapsed / repeats


def run_benchmark(repeats: int = 20000):
    kwargs, u = _workload()
    rows = []
    cost_pure, t_pure = _time_backend(pure, kwargs, u, max(1, repeats // 20))
    rows.append(("pure", cost_pure, t_pure))
    if _kernels.IMPL_NAME == "compiled":
        cost_c, t_c = _time_backend(_kernels, kwargs, u, repeats)
        rows.append(("compiled", cost_c, t_c))
    print(f"{'backend':<10} {'cost':>22} {'us/call':>10}")
    for name, cost, per_call in rows:
        print(f"{name:<10} {cost:>22.15g} {per_call * 1e6:>10.2f}")
    if len(rows) == 2:
        print(f"speedup: {rows[0][2] / rows[1][2]:.1f}x; "
              f"cost match: {rows[0][1] == rows[1][1]}")
    else:
        print("compiled kernel not available; showing pure backend only")
