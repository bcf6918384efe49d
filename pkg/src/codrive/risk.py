"""Driving-risk assessment from predicted positions.

Lateral risk r_y comes from a Gaussian-decay potential field over the distance
to the safe-area boundaries. Longitudinal risk r_x comes from a dynamic
potential field per neighbor: a closing-speed kernel (von-Mises style,
Bessel-normalized) times a super-Gaussian distance kernel, normalized by the
field value at the minimal safe distance and combined with task weights.
Both risks live in [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

FOLLOWER = "follower"
LEADER = "leader"
PRECEDING = "preceding"
ROLES = (FOLLOWER, LEADER, PRECEDING)


@dataclass(frozen=True)
class ApfParams:
    alpha_f: float = 30.0  # field magnitude at the boundary
    sigma_y: float = 1.0   # lateral convergence (m), half the vehicle width
    d_c: float = 0.8       # safety margin (m)
    v_w: float = 2.0       # vehicle width (m)

    def __post_init__(self):
        for name in ("alpha_f", "sigma_y", "d_c", "v_w"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"APF parameter {name} must be positive")

    @property
    def cutoff(self) -> float:
        """Distance beyond which the boundary potential is exactly zero."""
        return self.d_c + 0.5 * self.v_w


@dataclass(frozen=True)
class DpfParams:
    alpha: float = 10.0   # velocity-field gain
    a_f: float = 2.0      # distance-field gain
    sigma_x: float = 4.0  # longitudinal convergence (m), twice the minimum clearance
    b: float = 2.0        # shape exponent of the distance kernel
    a_max: float = 7.0    # max deceleration (m/s^2)
    t_r: float = 0.1      # reaction time (s)
    t_i: float = 0.1      # deceleration build-up time (s)
    d_o: float = 2.0      # minimum clearance between adjacent vehicles (m)

    def __post_init__(self):
        if self.b < 1.0:
            raise ValueError("shape exponent b must be >= 1")
        for name in ("alpha", "a_f", "sigma_x", "a_max", "d_o"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"DPF parameter {name} must be positive")


@dataclass(frozen=True)
class TaskWeights:
    w_f: float  # follower
    w_l: float  # leader
    w_p: float  # preceding

    def __post_init__(self):
        if min(self.w_f, self.w_l, self.w_p) < 0.0:
            raise ValueError("task weights must be nonnegative")
        if abs(self.w_f + self.w_l + self.w_p - 1.0) > 1e-9:
            raise ValueError("task weights must sum to 1")

    def get(self, role: str) -> float:
        return {FOLLOWER: self.w_f, LEADER: self.w_l, PRECEDING: self.w_p}[role]


LANE_CHANGE_WEIGHTS = TaskWeights(w_f=0.8, w_l=0.1, w_p=0.1)
LANE_KEEP_WEIGHTS = TaskWeights(w_f=0.1, w_l=0.2, w_p=0.7)


@dataclass(frozen=True)
class NeighborTerm:
    """Per-neighbor detail of the longitudinal assessment."""
    role: str
    closing_speed: float   # positive when the pair is approaching
    gap: float             # signed longitudinal distance neighbor - ego (m)
    safe_distance: float   # minimal safe distance for the pair's speeds (m)
    potential: float       # raw DPF value (underflows to 0 for large gaps)
    ratio: float           # normalized DPF in [0, 1]


@dataclass(frozen=True)
class RiskReport:
    r_y: float
    r_x: float
    boundary_distance: float
    boundary_potential: float
    terms: tuple[NeighborTerm, ...] = field(default_factory=tuple)


def bessel_i0(x: float) -> float:
    """Modified Bessel function of order 0, by its power series.

    Terms are accumulated until they fall below 1e-15 of the partial sum,
    which is ample for the |x| < 50 range the risk kernel uses.
    """
    x = abs(x)
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term < 1e-15 * total:
            return total


def lateral_risk_from_distance(boundary_distance: float, p: ApfParams) -> tuple[float, float]:
    """(boundary potential, r_y) from the distance to the safe-area boundaries.

    The distance is 0 on or outside the boundaries, so the potential peaks at
    alpha_f there; beyond d_c + v_w/2 it is exactly zero.
    """
    r_b = boundary_distance
    if r_b > p.cutoff:
        return 0.0, 0.0
    pot = p.alpha_f * math.exp(-(r_b * r_b) / (p.sigma_y * p.sigma_y))
    return pot, max(0.0, pot / p.alpha_f)


def lateral_risk(area, predicted_pos: tuple[float, float], p: ApfParams) -> tuple[float, float]:
    """(boundary potential, r_y) of a predicted position against a safe area."""
    return lateral_risk_from_distance(area.distance_to_boundaries(predicted_pos), p)


def _log_dpf(closing_speed: float, signed_gap: float, p: DpfParams) -> float:
    """log of the DPF for closing traffic; the caller guards closing_speed > 0."""
    c = closing_speed
    two_b = 2.0 * p.b
    log_rd = math.log(p.a_f) - (abs(signed_gap) ** two_b) / (2.0 * p.sigma_x ** two_b)
    log_eo = math.log(p.alpha) + c - math.log(2.0 * math.pi * bessel_i0(c))
    return log_eo + log_rd


def dpf(closing_speed: float, signed_gap: float, p: DpfParams) -> float:
    """Dynamic potential field value for one ego/neighbor pair.

    Separating or speed-matched traffic (closing_speed <= 0) carries no risk
    and returns 0. Evaluation goes through the log domain so the gap^(2b)
    exponent cannot produce 0*inf artifacts at large distances.
    """
    if closing_speed <= 0.0:
        return 0.0
    log_u = _log_dpf(closing_speed, signed_gap, p)
    if log_u < -745.0:  # exp underflows to 0 anyway
        return 0.0
    return math.exp(log_u)


def safe_distance(v_e: float, v_o: float, p: DpfParams) -> float:
    """Minimal safe distance between the ego and one neighbor (m)."""
    if v_e < 0.0 or v_o < 0.0:
        raise ValueError("speeds must be nonnegative")
    return (
        abs(v_e * v_e - v_o * v_o) / (2.0 * p.a_max)
        + max(v_o, v_e) * (p.t_r + 0.5 * p.t_i)
        + p.d_o
    )


def _neighbor_term(role: str, ego_s: float, ego_v: float, nbr_s: float, nbr_v: float,
                   p: DpfParams) -> NeighborTerm:
    gap = nbr_s - ego_s
    ahead = ego_s <= nbr_s
    closing = ego_v - nbr_v if ahead else nbr_v - ego_v
    d_s = safe_distance(ego_v, nbr_v, p)
    if closing <= 0.0:
        return NeighborTerm(role, closing, gap, d_s, 0.0, 0.0)
    # ratio = U(gap) / U(d_s): the closing-speed kernel cancels, so the log
    # ratio reduces to the difference of the distance-kernel exponents
    two_b = 2.0 * p.b
    log_ratio = (d_s ** two_b - abs(gap) ** two_b) / (2.0 * p.sigma_x ** two_b)
    ratio = min(1.0, math.exp(min(0.0, log_ratio)))
    return NeighborTerm(role, closing, gap, d_s, dpf(closing, gap, p), ratio)


def longitudinal_risk(
    ego: tuple[float, float],
    neighbors: dict[str, tuple[float, float]],
    w: TaskWeights,
    p: DpfParams,
) -> tuple[float, tuple[NeighborTerm, ...]]:
    """(r_x, per-neighbor terms) from predicted (station, speed) pairs.

    neighbors maps a subset of {"follower", "leader", "preceding"} to
    predicted (station, speed); the weight of an absent neighbor is dropped
    without renormalizing.
    """
    unknown = set(neighbors) - set(ROLES)
    if unknown:
        raise ValueError(f"unknown neighbor roles: {sorted(unknown)}")
    ego_s, ego_v = ego
    terms = []
    r_x = 0.0
    for role in ROLES:
        if role not in neighbors:
            continue
        nbr_s, nbr_v = neighbors[role]
        term = _neighbor_term(role, ego_s, ego_v, nbr_s, nbr_v, p)
        terms.append(term)
        r_x += w.get(role) * term.ratio
    return min(1.0, r_x), tuple(terms)


def assess(
    boundary_distance: float,
    ego: tuple[float, float],
    neighbors: dict[str, tuple[float, float]],
    apf: ApfParams,
    dpf_params: DpfParams,
    weights: TaskWeights,
) -> RiskReport:
    """Full lateral + longitudinal assessment for one control step."""
    pot, r_y = lateral_risk_from_distance(boundary_distance, apf)
    r_x, terms = longitudinal_risk(ego, neighbors, weights, dpf_params)
    return RiskReport(
        r_y=r_y,
        r_x=r_x,
        boundary_distance=boundary_distance,
        boundary_potential=pot,
        terms=terms,
    )
