"""Road layouts and the station/lateral-offset frame used by the rest of the stack.

Two layouts are supported: a straight multi-lane road and a constant-radius
left-hand curve. All risk and corridor geometry runs in the road frame
(s = longitudinal station, d = lateral offset, d=0 on the right road edge,
d increasing leftward), so straight-road formulas apply unchanged on the
curve. For the curve, the frame distorts radially by at most
lane_count*lane_width/R, which is negligible for the modeled geometries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

STRAIGHT = "straight"
CURVE = "curve"


class RoadExtentError(ValueError):
    """Raised when a station falls outside the modeled road extent."""


@dataclass(frozen=True)
class RoadModel:
    kind: str                 # "straight" or "curve"
    lane_width: float = 3.5   # m
    lane_count: int = 2
    length: float = 500.0     # modeled extent along the station axis (m)
    radius: float = 0.0       # lane-0 centerline radius (m), curve only

    def __post_init__(self):
        if self.kind not in (STRAIGHT, CURVE):
            raise ValueError(f"unknown road kind: {self.kind!r}")
        if self.lane_width <= 2.0:
            raise ValueError("lane_width must exceed the vehicle width (2 m)")
        if self.lane_count < 1:
            raise ValueError("lane_count must be >= 1")
        if self.kind == CURVE:
            if self.radius <= 0.0:
                raise ValueError("curve requires radius > 0")
            if self.length >= 2.0 * math.pi * self.radius:
                raise ValueError("curve length must stay below a full circle")

    @property
    def width(self) -> float:
        return self.lane_count * self.lane_width

    @property
    def edge_radius(self) -> float:
        """Radius of the d=0 reference edge (lane-0 center sits at radius)."""
        return self.radius + 0.5 * self.lane_width

    def _check_extent(self, s: float):
        if not (0.0 <= s <= self.length):
            raise RoadExtentError(f"station {s:.3f} outside road extent [0, {self.length:.3f}]")


def road_heading(road: RoadModel, arc_position: float) -> float:
    """Tangent direction of the lane centerline at a longitudinal station (rad)."""
    road._check_extent(arc_position)
    if road.kind == STRAIGHT:
        return 0.0
    return arc_position / road.radius


def lane_center(road: RoadModel, lane_index: int, arc_position: float) -> tuple[float, float]:
    """World-frame point on the lane centerline at the given station."""
    if not (0 <= lane_index < road.lane_count):
        raise IndexError(f"lane index {lane_index} out of range (lane_count={road.lane_count})")
    road._check_extent(arc_position)
    return from_road_frame(road, arc_position, lane_center_offset(road, lane_index))


def lane_center_offset(road: RoadModel, lane_index: int) -> float:
    """Lateral offset d of a lane centerline."""
    if not (0 <= lane_index < road.lane_count):
        raise IndexError(f"lane index {lane_index} out of range (lane_count={road.lane_count})")
    return (lane_index + 0.5) * road.lane_width


def from_road_frame(road: RoadModel, s: float, d: float) -> tuple[float, float]:
    """(station, lateral offset) -> world (x, y)."""
    if road.kind == STRAIGHT:
        return (s, d)
    re = road.edge_radius
    phi = s / road.radius
    # curve center sits at (0, edge_radius); d=0 tracks the right edge
    return (re - d) * math.sin(phi), re - (re - d) * math.cos(phi)


def to_road_frame(road: RoadModel, x: float, y: float, s_hint: float | None = None) -> tuple[float, float]:
    """World (x, y) -> (station, lateral offset).

    For the curve the station is recovered from atan2 and therefore wraps at
    half a turn; pass the previous known station as s_hint to unwrap when the
    road covers more than pi*R of arc.
    """
    if road.kind == STRAIGHT:
        return (x, y)
    re = road.edge_radius
    dx, dy = x, y - re
    radial = math.hypot(dx, dy)
    d = re - radial
    phi = math.atan2(dx, -dy)
    s = phi * road.radius
    if s_hint is not None:
        turn = 2.0 * math.pi * road.radius
        s += math.floor((s_hint - s) / turn + 0.5) * turn
    return s, d
