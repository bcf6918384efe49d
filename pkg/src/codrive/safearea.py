"""Safe driving corridor: triangulate the window, chain triangles, extract walls.

The drivable window (minus vehicle footprints) is cut into constrained
Delaunay triangles; a breadth-first search over the adjacency matrix yields
the shortest triangle channel from the ego's position to the final region
behind the preceding vehicle. The channel's portal endpoints, classified left
and right of the travel direction, form the upper and lower boundary
polylines; the channel closes at the far vertex of the final triangle.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import cdt
from .road import RoadModel


class ContainmentError(ValueError):
    """A query point is not inside the triangulated free space."""


class DisconnectedError(ValueError):
    """No triangle channel connects the start point to the final region."""


@dataclass(frozen=True)
class Obstacle:
    center_s: float   # footprint center, station (m)
    center_d: float   # footprint center, lateral offset (m)
    length: float     # longitudinal extent (m)
    width: float      # lateral extent (m)
    speed: float = 0.0

    def rect(self) -> tuple[float, float, float, float]:
        hl, hw = 0.5 * self.length, 0.5 * self.width
        return (self.center_s - hl, self.center_s + hl, self.center_d - hw, self.center_d + hw)

    def contains(self, s: float, d: float, margin: float = 0.0) -> bool:
        r = self.rect()
        return r[0] + margin < s < r[1] - margin and r[2] + margin < d < r[3] - margin


@dataclass(frozen=True)
class Triangulation:
    points: np.ndarray       # (V, 2) road-frame vertices
    triangles: np.ndarray    # (N, 3) vertex indices of free-space triangles
    adjacency: np.ndarray    # (N, N) 0/1, symmetric, shares-exactly-one-edge
    constrained_edges: tuple # frozensets of vertex index pairs
    obstacles: tuple         # clipped obstacle rects used for the free-space filter
    window: tuple            # (s_min, s_max, d_min, d_max)

    def triangle_coords(self, idx: int) -> np.ndarray:
        return self.points[self.triangles[idx]]


@dataclass(frozen=True)
class SafeArea:
    channel: tuple            # ordered free-triangle indices, start -> final
    upper: np.ndarray         # (nu, 2) upper boundary polyline (road frame)
    lower: np.ndarray         # (nl, 2) lower boundary polyline
    s_end: float              # station where the corridor closes

    def distance_to_boundaries(self, p: tuple[float, float]) -> float:
        return distance_to_boundaries(self, p)

    def violation_distance(self, p: tuple[float, float]) -> float:
        return violation_distance(self, p)


def triangulate(
    road: RoadModel,
    obstacles: list[Obstacle],
    window: tuple[float, float],
    lateral_window: tuple[float, float] | None = None,
    boundary_spacing: float = 0.0,
) -> Triangulation:
    """CDT of the drivable window with the obstacle footprints carved out."""
    s0 = max(0.0, window[0])
    s1 = min(road.length, window[1])
    d0, d1 = lateral_window if lateral_window is not None else (0.0, road.width)
    d0 = max(0.0, d0)
    d1 = min(road.width, d1)
    rect_window = (s0, s1, d0, d1)
    rects = [o.rect() for o in obstacles]
    points, triangles, constrained, adjacency = cdt.triangulate_window(
        rect_window, rects, boundary_spacing=boundary_spacing)
    kept = []
    for r in rects:
        c = (max(r[0], s0), min(r[1], s1), max(r[2], d0), min(r[3], d1))
        if c[1] - c[0] > 1e-9 and c[3] - c[2] > 1e-9:
            kept.append(c)
    return Triangulation(
        points=points,
        triangles=triangles,
        adjacency=adjacency,
        constrained_edges=tuple(constrained),
        obstacles=tuple(kept),
        window=rect_window,
    )


def _point_in_triangle(pts: np.ndarray, tri, p) -> bool:
    a, b, c = pts[tri[0]], pts[tri[1]], pts[tri[2]]
    s1 = cdt._orient(a, b, p)
    s2 = cdt._orient(b, c, p)
    s3 = cdt._orient(c, a, p)
    return s1 >= 0 and s2 >= 0 and s3 >= 0


def locate(tri: Triangulation, p: tuple[float, float]) -> int:
    """Index of the lowest-numbered free triangle containing p."""
    for idx, t in enumerate(tri.triangles):
        if _point_in_triangle(tri.points, t, p):
            return idx
    s0, s1, d0, d1 = tri.window
    inside_window = s0 <= p[0] <= s1 and d0 <= p[1] <= d1
    reason = "inside an obstacle footprint" if inside_window else "outside the window"
    raise ContainmentError(f"point ({p[0]:.3f}, {p[1]:.3f}) is {reason}")


def find_corridor(tri: Triangulation, s_p: tuple[float, float], f_p: tuple[float, float]) -> SafeArea:
    """Shortest triangle channel from s_p to f_p with its boundary polylines."""
    start = locate(tri, s_p)
    goal = locate(tri, f_p)
    channel = _bfs_channel(tri.adjacency, start, goal)
    if len(channel) == 1:
        return _single_triangle_area(tri, channel)
    return _portal_area(tri, channel)


def _bfs_channel(adjacency: np.ndarray, start: int, goal: int) -> list[int]:
    if start == goal:
        return [start]
    n = adjacency.shape[0]
    parent = {start: -1}
    frontier = deque([start])
    while frontier:
        cur = frontier.popleft()
        for nxt in range(n):  # index order keeps ties deterministic
            if adjacency[cur, nxt] and nxt not in parent:
                parent[nxt] = cur
                if nxt == goal:
                    path = [goal]
                    while path[-1] != start:
                        path.append(parent[path[-1]])
                    return path[::-1]
                frontier.append(nxt)
    raise DisconnectedError("no triangle channel connects the start point to the final region")


def _single_triangle_area(tri: Triangulation, channel: list[int]) -> SafeArea:
    t = tri.triangles[channel[0]]
    coords = tri.points[t]
    centroid_d = float(coords[:, 1].mean())
    upper_edges, lower_edges = [], []
    for k in range(3):
        a, b = coords[k], coords[(k + 1) % 3]
        mid_d = 0.5 * (a[1] + b[1])
        (upper_edges if mid_d > centroid_d else lower_edges).append((tuple(a), tuple(b)))
    upper = _edges_to_polyline(upper_edges)
    lower = _edges_to_polyline(lower_edges)
    return SafeArea(
        channel=tuple(channel),
        upper=upper,
        lower=lower,
        s_end=float(coords[:, 0].max()),
    )


def _edges_to_polyline(edges) -> np.ndarray:
    pts: list[tuple[float, float]] = []
    for a, b in edges:
        for p in (a, b):
            if not any(abs(p[0] - q[0]) < 1e-12 and abs(p[1] - q[1]) < 1e-12 for q in pts):
                pts.append((float(p[0]), float(p[1])))
    pts.sort()
    return np.asarray(pts, dtype=float)


def _portal_area(tri: Triangulation, channel: list[int]) -> SafeArea:
    pts = tri.points
    upper_idx: list[int] = []
    lower_idx: list[int] = []
    for i in range(len(channel) - 1):
        t_cur = set(tri.triangles[channel[i]])
        t_nxt = set(tri.triangles[channel[i + 1]])
        portal = sorted(t_cur & t_nxt)
        if len(portal) != 2:
            raise AssertionError("consecutive channel triangles must share one edge")
        ca = pts[list(t_cur)].mean(axis=0)
        cb = pts[list(t_nxt)].mean(axis=0)
        tx, ty = cb[0] - ca[0], cb[1] - ca[1]
        u, v = portal
        cross = tx * (pts[u][1] - pts[v][1]) - ty * (pts[u][0] - pts[v][0])
        left, right = (u, v) if cross > 0 else (v, u)
        if not upper_idx or upper_idx[-1] != left:
            upper_idx.append(left)
        if not lower_idx or lower_idx[-1] != right:
            lower_idx.append(right)
    # close the corridor at the far vertex of the final triangle
    last_portal = {upper_idx[-1], lower_idx[-1]}
    t_final = tri.triangles[channel[-1]]
    shared = set(t_final) & (set(tri.triangles[channel[-2]]))
    far = [v for v in t_final if v not in shared]
    if len(far) == 1:
        upper_idx.append(far[0])
        lower_idx.append(far[0])
    upper = _monotone_polyline(pts[upper_idx])
    lower = _monotone_polyline(pts[lower_idx])
    s_end = float(max(upper[-1, 0], lower[-1, 0]))
    return SafeArea(channel=tuple(channel), upper=upper, lower=lower, s_end=s_end)


def _monotone_polyline(points: np.ndarray) -> np.ndarray:
    """Drop points that step backwards in station; interpolation needs monotone s."""
    kept = [points[0]]
    for p in points[1:]:
        if p[0] >= kept[-1][0] - 1e-9:
            kept.append(p)
    return np.asarray(kept, dtype=float)


def _interp_d(poly: np.ndarray, s: float) -> float:
    """Lateral offset of a boundary at a station, constant beyond its ends."""
    if len(poly) == 1 or s <= poly[0, 0]:
        return float(poly[0, 1])
    if s >= poly[-1, 0]:
        return float(poly[-1, 1])
    idx = int(np.searchsorted(poly[:, 0], s, side="right")) - 1
    s0, d0 = poly[idx]
    s1, d1 = poly[idx + 1]
    if s1 - s0 < 1e-12:
        return float(d1)
    t = (s - s0) / (s1 - s0)
    return float(d0 + t * (d1 - d0))


def _point_segment_distance(px, py, ax, ay, bx, by) -> float:
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    if den < 1e-24:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / den
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _polyline_distance(poly: np.ndarray, p) -> float:
    best = math.inf
    for i in range(len(poly) - 1):
        best = min(best, _point_segment_distance(p[0], p[1], poly[i, 0], poly[i, 1],
                                                 poly[i + 1, 0], poly[i + 1, 1]))
    if len(poly) == 1:
        best = math.hypot(p[0] - poly[0, 0], p[1] - poly[0, 1])
    return best


def distance_to_boundaries(area: SafeArea, p: tuple[float, float]) -> float:
    """Minimum distance from p to either boundary; 0 on or outside the corridor."""
    s, d = p
    if s > area.s_end:
        return 0.0
    lo = _interp_d(area.lower, s)
    hi = _interp_d(area.upper, s)
    if not (lo <= d <= hi):
        return 0.0
    return min(_polyline_distance(area.upper, p), _polyline_distance(area.lower, p))


def violation_distance(area: SafeArea, p: tuple[float, float]) -> float:
    """Distance from p to the corridor region (0 inside)."""
    s, d = p
    lon = max(0.0, s - area.s_end)
    s_c = min(s, area.s_end)
    lo = _interp_d(area.lower, s_c)
    hi = _interp_d(area.upper, s_c)
    lat = max(0.0, lo - d, d - hi)
    return math.hypot(lon, lat)
