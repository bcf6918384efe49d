"""Control-authority allocation.

A Mamdani fuzzy inference system maps (lateral risk, longitudinal risk) to
the maximum automation authority alpha_a in [0, 1]: five-set triangular
partitions on each input (end sets shouldered), a seven-set output partition,
min implication, max aggregation, and center-of-gravity defuzzification on a
201-point grid. The allocation law then passes healthy or mildly degraded
automation output through and caps everything else at alpha_a times the
desired control.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControlVector

LATERAL_LEVELS = ("VS", "S", "M", "B", "VB")
LONGITUDINAL_LEVELS = ("VS", "S", "M", "L", "VL")
OUTPUT_LEVELS = ("VVL", "VL", "L", "M", "H", "VH", "VVH")

BRANCH_HEALTHY = 1        # ratio ~ 1: degraded output equals the desire
BRANCH_PASS_THROUGH = 2   # mild degradation below the authority bound
BRANCH_CAPPED = 3         # authority cap alpha_a * u_des


@dataclass(frozen=True)
class FuzzySet:
    lo: float
    peak: float
    hi: float
    left_shoulder: bool = False
    right_shoulder: bool = False

    def membership(self, x: float) -> float:
        if x < self.peak:
            if self.left_shoulder:
                return 1.0
            if x <= self.lo:
                return 0.0
            return (x - self.lo) / (self.peak - self.lo)
        if x > self.peak:
            if self.right_shoulder:
                return 1.0
            if x >= self.hi:
                return 0.0
            return (self.hi - x) / (self.hi - self.peak)
        return 1.0


def _partition(peaks: tuple[float, ...]) -> tuple[FuzzySet, ...]:
    sets = []
    for i, p in enumerate(peaks):
        lo = peaks[i - 1] if i > 0 else p
        hi = peaks[i + 1] if i + 1 < len(peaks) else p
        sets.append(FuzzySet(lo=lo, peak=p, hi=hi,
                             left_shoulder=(i == 0), right_shoulder=(i + 1 == len(peaks))))
    return tuple(sets)


INPUT_PEAKS = (0.0, 0.25, 0.5, 0.75, 1.0)
OUTPUT_PEAKS = tuple(k / 6.0 for k in range(7))


@dataclass(frozen=True)
class FuzzySets:
    lateral: tuple[FuzzySet, ...] = field(default_factory=lambda: _partition(INPUT_PEAKS))
    longitudinal: tuple[FuzzySet, ...] = field(default_factory=lambda: _partition(INPUT_PEAKS))
    output: tuple[FuzzySet, ...] = field(default_factory=lambda: _partition(OUTPUT_PEAKS))
    resolution: int = 201

    def output_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """(grid z values, per-set membership matrix of shape (n_sets, n_z))."""
        z = np.linspace(0.0, 1.0, self.resolution)
        table = np.array([[s.membership(float(v)) for v in z] for s in self.output])
        return z, table


@dataclass(frozen=True)
class RuleBase:
    """5x5 table: (lateral level index, longitudinal level index) -> output level."""
    table: tuple[tuple[int, ...], ...] = field(
        default_factory=lambda: tuple(
            tuple(max(0, min(6, 6 - i - j)) for j in range(5)) for i in range(5)
        )
    )

    def __post_init__(self):
        if len(self.table) != 5 or any(len(row) != 5 for row in self.table):
            raise ValueError("rule table must be 5x5")
        for row in self.table:
            for v in row:
                if not (0 <= v <= 6):
                    raise ValueError("rule outputs must be output-level indices 0..6")
        for i in range(5):
            for j in range(4):
                if self.table[i][j + 1] > self.table[i][j]:
                    raise ValueError("rule table must be non-increasing in each risk level")
                if self.table[j + 1][i] > self.table[j][i]:
                    raise ValueError("rule table must be non-increasing in each risk level")


_DEFAULT_SETS = FuzzySets()
_DEFAULT_RULES = RuleBase()
_GRID_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def fis_alpha(r_y: float, r_x: float,
              sets: FuzzySets | None = None, rules: RuleBase | None = None) -> float:
    """Maximum automation authority from the two risks, via Mamdani inference."""
    sets = sets if sets is not None else _DEFAULT_SETS
    rules = rules if rules is not None else _DEFAULT_RULES
    ry = min(1.0, max(0.0, r_y))
    rx = min(1.0, max(0.0, r_x))
    lat = [s.membership(ry) for s in sets.lateral]
    lon = [s.membership(rx) for s in sets.longitudinal]
    strength = [0.0] * len(sets.output)
    for i, mu_i in enumerate(lat):
        if mu_i == 0.0:
            continue
        for j, mu_j in enumerate(lon):
            if mu_j == 0.0:
                continue
            level = rules.table[i][j]
            s = min(mu_i, mu_j)
            if s > strength[level]:
                strength[level] = s
    key = id(sets)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = sets.output_grid()
    z, table = _GRID_CACHE[key]
    agg = np.zeros_like(z)
    for level, s in enumerate(strength):
        if s > 0.0:
            np.maximum(agg, np.minimum(s, table[level]), out=agg)
    total = float(agg.sum())
    if total == 0.0:
        return 0.0
    return float(np.dot(z, agg) / total)


@dataclass(frozen=True)
class AllocationParams:
    epsilon: float = 1e-6   # ratio guard, in the units of each control component
    ratio_tol: float = 0.02  # half-width of the "ratio ~ 1" healthy band

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.ratio_tol <= 0.0:
            raise ValueError("ratio_tol must be positive")


def _sign(x: float) -> float:
    return 1.0 if x >= 0.0 else -1.0


def allocate_component(u_des: float, u_f: float, alpha_a: float,
                       p: AllocationParams) -> tuple[float, int]:
    """Actual output of one control channel plus the branch that produced it."""
    ratio = u_f / (u_des + p.epsilon * _sign(u_des))
    if abs(ratio - 1.0) <= p.ratio_tol:
        return u_f, BRANCH_HEALTHY
    if 0.0 < ratio < alpha_a:
        return u_f, BRANCH_PASS_THROUGH
    return alpha_a * u_des, BRANCH_CAPPED


def allocate(u_des: ControlVector, u_f: ControlVector, alpha_a: float,
             p: AllocationParams | None = None) -> ControlVector:
    """Actual automation control under the authority bound alpha_a."""
    p = p if p is not None else AllocationParams()
    a, _ = allocate_component(u_des.a, u_f.a, alpha_a, p)
    delta, _ = allocate_component(u_des.delta, u_f.delta, alpha_a, p)
    return ControlVector(a=a, delta=delta)
