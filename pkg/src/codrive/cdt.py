"""Constrained Delaunay triangulation of a rectangular driving window.

The unconstrained triangulation comes from scipy's Delaunay (Qhull); the
input segments (window border and obstacle footprints) are then recovered by
edge flipping where Qhull did not already produce them, followed by a Lawson
legalization pass that restores the empty-circumcircle property everywhere a
constraint does not forbid it. Orientation and incircle predicates fall back
to exact rational arithmetic when the float determinant is too close to zero
to trust.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.spatial import Delaunay


class GeometryError(ValueError):
    """Invalid input geometry (overlapping obstacles, unrecoverable segment)."""


def _orient(pa, pb, pc) -> int:
    """Sign of the (pa, pb, pc) orientation: +1 CCW, -1 CW, 0 collinear."""
    acx = pa[0] - pc[0]
    acy = pa[1] - pc[1]
    bcx = pb[0] - pc[0]
    bcy = pb[1] - pc[1]
    t1 = acx * bcy
    t2 = acy * bcx
    det = t1 - t2
    bound = 3.33e-16 * (abs(t1) + abs(t2))
    if abs(det) > bound:
        return 1 if det > 0.0 else -1
    det = Fraction(acx) * Fraction(bcy) - Fraction(acy) * Fraction(bcx)
    return (det > 0) - (det < 0)


def _incircle(pa, pb, pc, pd) -> int:
    """+1 when pd lies strictly inside the circumcircle of CCW (pa, pb, pc)."""
    adx = pa[0] - pd[0]
    ady = pa[1] - pd[1]
    bdx = pb[0] - pd[0]
    bdy = pb[1] - pd[1]
    cdx = pc[0] - pd[0]
    cdy = pc[1] - pd[1]
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    det = (
        ad2 * (bdx * cdy - bdy * cdx)
        - bd2 * (adx * cdy - ady * cdx)
        + cd2 * (adx * bdy - ady * bdx)
    )
    mags = (
        ad2 * (abs(bdx * cdy) + abs(bdy * cdx))
        + bd2 * (abs(adx * cdy) + abs(ady * cdx))
        + cd2 * (abs(adx * bdy) + abs(ady * bdx))
    )
    if abs(det) > 1.2e-15 * mags:
        return 1 if det > 0.0 else -1
    fa = [Fraction(v) for v in (adx, ady, bdx, bdy, cdx, cdy)]
    adx, ady, bdx, bdy, cdx, cdy = fa
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    det = (
        ad2 * (bdx * cdy - bdy * cdx)
        - bd2 * (adx * cdy - ady * cdx)
        + cd2 * (adx * bdy - ady * bdx)
    )
    return (det > 0) - (det < 0)


def _segments_cross(a, b, c, d) -> bool:
    """True when segments ab and cd cross properly (no shared endpoints)."""
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, d)
    o3 = _orient(c, d, a)
    o4 = _orient(c, d, b)
    return o1 * o2 < 0 and o3 * o4 < 0


class _Mesh:
    """Mutable triangle soup with an edge map, supporting diagonal flips."""

    def __init__(self, points: np.ndarray, simplices: np.ndarray):
        self.pts = points
        self.tris: list[tuple[int, int, int] | None] = []
        self.edge_map: dict[frozenset, set[int]] = {}
        for simplex in simplices:
            self._add_tri(tuple(int(v) for v in simplex))

    def _add_tri(self, tri) -> int:
        a, b, c = tri
        if _orient(self.pts[a], self.pts[b], self.pts[c]) < 0:
            tri = (a, c, b)
        idx = len(self.tris)
        self.tris.append(tri)
        for e in _tri_edges(tri):
            self.edge_map.setdefault(e, set()).add(idx)
        return idx

    def _remove_tri(self, idx: int):
        tri = self.tris[idx]
        for e in _tri_edges(tri):
            group = self.edge_map[e]
            group.discard(idx)
            if not group:
                del self.edge_map[e]
        self.tris[idx] = None

    def flip(self, edge: frozenset) -> frozenset:
        """Replace the diagonal `edge` of its two-triangle quad by the other one."""
        t1_idx, t2_idx = sorted(self.edge_map[edge])
        u, v = sorted(edge)
        p = _opposite_vertex(self.tris[t1_idx], edge)
        q = _opposite_vertex(self.tris[t2_idx], edge)
        self._remove_tri(t1_idx)
        self._remove_tri(t2_idx)
        self._add_tri((p, q, u))
        self._add_tri((p, q, v))
        return frozenset((p, q))

    def is_flippable(self, edge: frozenset) -> bool:
        group = self.edge_map.get(edge)
        if group is None or len(group) != 2:
            return False
        t1_idx, t2_idx = sorted(group)
        p = _opposite_vertex(self.tris[t1_idx], edge)
        q = _opposite_vertex(self.tris[t2_idx], edge)
        u, v = sorted(edge)
        # the quad must be strictly convex for the flipped diagonal to be valid
        return (
            _orient(self.pts[p], self.pts[q], self.pts[u])
            * _orient(self.pts[p], self.pts[q], self.pts[v])
            < 0
            and _segments_cross(self.pts[p], self.pts[q], self.pts[u], self.pts[v])
        )

    def live_triangles(self) -> list[tuple[int, int, int]]:
        return [t for t in self.tris if t is not None]


def _tri_edges(tri):
    a, b, c = tri
    return (frozenset((a, b)), frozenset((b, c)), frozenset((c, a)))


def _opposite_vertex(tri, edge: frozenset) -> int:
    for v in tri:
        if v not in edge:
            return v
    raise AssertionError("degenerate triangle")


def _split_at_collinear(points: np.ndarray, seg: tuple[int, int]) -> list[tuple[int, int]]:
    """Break a constraint at every vertex lying on its interior."""
    a, b = seg
    pa, pb = points[a], points[b]
    length2 = float((pb[0] - pa[0]) ** 2 + (pb[1] - pa[1]) ** 2)
    on_seg = []
    for idx in range(len(points)):
        if idx in (a, b):
            continue
        pc = points[idx]
        if _orient(pa, pb, pc) != 0:
            continue
        t = ((pc[0] - pa[0]) * (pb[0] - pa[0]) + (pc[1] - pa[1]) * (pb[1] - pa[1])) / length2
        if 1e-12 < t < 1.0 - 1e-12:
            on_seg.append((t, idx))
    on_seg.sort()
    chain = [a] + [idx for _, idx in on_seg] + [b]
    return [(chain[i], chain[i + 1]) for i in range(len(chain) - 1)]


def _recover_segment(mesh: _Mesh, seg: tuple[int, int], constrained: set[frozenset]):
    edge = frozenset(seg)
    if edge in mesh.edge_map:
        return
    pa, pb = mesh.pts[seg[0]], mesh.pts[seg[1]]
    created: list[frozenset] = []
    for _ in range(10000):
        if edge in mesh.edge_map:
            break
        crossing = sorted(
            (e for e in mesh.edge_map if e not in constrained
             and _segments_cross(pa, pb, mesh.pts[min(e)], mesh.pts[max(e)])),
            key=lambda e: tuple(sorted(e)),
        )
        if not crossing:
            raise GeometryError(f"cannot recover constraint {seg}: no crossing edges")
        progressed = False
        for e in crossing:
            if mesh.is_flippable(e):
                created.append(mesh.flip(e))
                progressed = True
                break
        if not progressed:
            raise GeometryError(f"cannot recover constraint {seg}: no flippable crossing edge")
    else:
        raise GeometryError(f"constraint recovery did not terminate for {seg}")
    _legalize(mesh, [e for e in created if e != edge], constrained | {edge})


def _legalize(mesh: _Mesh, suspects: list[frozenset], constrained: set[frozenset]):
    """Lawson flips restoring the Delaunay property away from constraints."""
    stack = list(suspects)
    guard = 0
    while stack:
        guard += 1
        if guard > 20000:
            raise GeometryError("legalization did not terminate")
        edge = stack.pop()
        if edge in constrained:
            continue
        group = mesh.edge_map.get(edge)
        if group is None or len(group) != 2:
            continue
        t1_idx, t2_idx = sorted(group)
        a, b, c = mesh.tris[t1_idx]
        p = _opposite_vertex(mesh.tris[t2_idx], edge)
        if _incircle(mesh.pts[a], mesh.pts[b], mesh.pts[c], mesh.pts[p]) > 0:
            if not mesh.is_flippable(edge):
                continue
            new_edge = mesh.flip(edge)
            # re-examine the four outer edges of the flipped quad
            for end in edge:
                for other in new_edge:
                    stack.append(frozenset((end, other)))


def triangulate_window(
    window: tuple[float, float, float, float],
    obstacle_rects: list[tuple[float, float, float, float]],
    boundary_spacing: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, list[frozenset], np.ndarray]:
    """CDT of the window rectangle minus obstacle footprints.

    window and rects are (s_min, s_max, d_min, d_max) in the road frame.
    boundary_spacing > 0 subdivides the window border at that interval so the
    mesh (and any triangle channel through it) hugs the geometry instead of
    spanning it with long chords. Returns (points, free triangles as index
    triples, constrained edges, adjacency matrix of the free triangles).
    """
    s0, s1, d0, d1 = window
    if s1 <= s0 or d1 <= d0:
        raise GeometryError("window must have positive extent")
    clipped = []
    for rect in obstacle_rects:
        r = (max(rect[0], s0), min(rect[1], s1), max(rect[2], d0), min(rect[3], d1))
        if r[1] - r[0] > 1e-9 and r[3] - r[2] > 1e-9:
            clipped.append(r)
    for i in range(len(clipped)):
        for j in range(i + 1, len(clipped)):
            a, b = clipped[i], clipped[j]
            if a[0] < b[1] - 1e-9 and b[0] < a[1] - 1e-9 and a[2] < b[3] - 1e-9 and b[2] < a[3] - 1e-9:
                raise GeometryError("obstacle footprints overlap")

    rects = [(s0, s1, d0, d1)] + clipped
    raw_points: list[tuple[float, float]] = []
    raw_segments: list[tuple[int, int]] = []
    for rs0, rs1, rd0, rd1 in rects:
        corners = [(rs0, rd0), (rs1, rd0), (rs1, rd1), (rs0, rd1)]
        idx = [_intern_point(raw_points, c) for c in corners]
        for k in range(4):
            raw_segments.append((idx[k], idx[(k + 1) % 4]))
    if boundary_spacing > 0.0:
        for rd in (d0, d1):
            n_seg = max(1, int(math.ceil((s1 - s0) / boundary_spacing)))
            for k in range(1, n_seg):
                _intern_point(raw_points, (s0 + (s1 - s0) * k / n_seg, rd))

    points = np.asarray(raw_points, dtype=float)
    mesh = _Mesh(points, Delaunay(points).simplices)

    constrained: set[frozenset] = set()
    sub_segments: list[tuple[int, int]] = []
    for seg in raw_segments:
        for sub in _split_at_collinear(points, seg):
            sub_segments.append(sub)
            constrained.add(frozenset(sub))
    for sub in sub_segments:
        _recover_segment(mesh, sub, constrained)

    tris = []
    for tri in mesh.live_triangles():
        cx = (points[tri[0]][0] + points[tri[1]][0] + points[tri[2]][0]) / 3.0
        cy = (points[tri[0]][1] + points[tri[1]][1] + points[tri[2]][1]) / 3.0
        if not any(r[0] < cx < r[1] and r[2] < cy < r[3] for r in clipped):
            tris.append(tri)
    tris.sort()
    triangles = np.asarray(tris, dtype=np.int64)

    n = len(tris)
    adjacency = np.zeros((n, n), dtype=np.uint8)
    edge_owner: dict[frozenset, list[int]] = {}
    for t_idx, tri in enumerate(tris):
        for e in _tri_edges(tri):
            edge_owner.setdefault(e, []).append(t_idx)
    for owners in edge_owner.values():
        if len(owners) == 2:
            i, j = owners
            adjacency[i, j] = 1
            adjacency[j, i] = 1
    return points, triangles, sorted(constrained, key=lambda e: tuple(sorted(e))), adjacency


def _intern_point(pool: list[tuple[float, float]], p: tuple[float, float]) -> int:
    for i, q in enumerate(pool):
        if abs(q[0] - p[0]) < 1e-9 and abs(q[1] - p[1]) < 1e-9:
            return i
    pool.append(p)
    return len(pool) - 1
