"""Kernel backend selection.

The compiled extension is preferred when importable; set CODRIVE_PURE=1 to
force the pure-Python twin (used by the parity tests and the benchmark).
"""
from __future__ import annotations

import os

from . import pure

if os.environ.get("CODRIVE_PURE", "").strip() in ("", "0"):
    try:
        from codrive import _speedups as _backend  # type: ignore[attr-defined]
    except ImportError:
        _backend = pure
else:
    _backend = pure

IMPL_NAME: str = _backend.IMPL_NAME
make_cost_context = _backend.make_cost_context
rollout_cost = _backend.rollout_cost

ROAD_STRAIGHT = pure.ROAD_STRAIGHT
ROAD_CURVE = pure.ROAD_CURVE
