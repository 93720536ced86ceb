"""Exact point-to-point and point-to-edge visibility.

Two semantics are supported. In a scene a segment is blocked only when it
crosses a polygon (endpoints strictly on opposite sides and the open segment
meets the closed polygon). In a polyhedron a segment is visible when it avoids
the interior or avoids the exterior; for the per-edge sets the open viewing
segment must also miss every closed edge.

Every query is answered by collecting the rational parameters at which the
combinatorics can change and classifying the pieces in between exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Set

from core.errors import InvariantViolation, SceneError
from core.exact_geom import (
    INSIDE,
    OUTSIDE,
    Point3,
    cross,
    dot,
    format_rat,
    lerp,
    orient3d,
    plane_hit_param,
    point_in_polygon_2d,
    point_on_segment,
    segment_crosses_polygon,
    segment_meet_params,
    segment_param,
    side_of_plane,
    sign,
)
from core.scene_model import Polyhedron, World, WorldEdge
from core.storage import point_list

logger = logging.getLogger(__name__)

INTERIOR = "interior"
EXTERIOR = "exterior"
ON_BOUNDARY = "boundary"

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class PointClass:
    kind: str
    feature: Optional[str] = None

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "feature": self.feature}


@dataclass(frozen=True)
class ParamInterval:
    """Closure [lo, hi] of a maximal visible run along an edge.

    The flags record whether the run itself contains its ends; two runs can
    share a closure endpoint when a single hidden parameter separates them.
    """

    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, t) -> bool:
        if t < self.lo or t > self.hi:
            return False
        if t == self.lo and not self.lo_closed:
            return False
        if t == self.hi and not self.hi_closed:
            return False
        return True

    def to_list(self) -> List[str]:
        return [format_rat(self.lo), format_rat(self.hi)]


@dataclass(frozen=True)
class VisibleSet:
    edge: str
    intervals: tuple = ()

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def positive(self) -> List[ParamInterval]:
        return [iv for iv in self.intervals if not iv.degenerate]

    def contains(self, t) -> bool:
        return any(iv.contains(t) for iv in self.intervals)

    def to_dict(self) -> Dict:
        return {"edge": self.edge, "intervals": [iv.to_list() for iv in self.intervals]}


# --- point classification ----------------------------------------------------


def _boundary_feature(P: Polyhedron, p: Point3) -> Optional[str]:
    for poly in P.polygons:
        if side_of_plane(poly.plane, p) != 0:
            continue
        if point_in_polygon_2d(poly, p) == OUTSIDE:
            continue
        vid = P.vertex_ids.get(p)
        if vid is not None:
            return vid
        for edge in P.edges:
            if point_on_segment(p, edge.a, edge.b):
                return edge.id
        return poly.id
    return None


def free_direction(world: World, p: Point3) -> Point3:
    """A ray direction from p that misses every boundary segment of the world."""
    k = 1
    while True:
        d = Point3(1, k, k * k)
        tip = p + d
        ok = True
        for a, b in world.segments:
            if orient3d(p, tip, a, b) != 0:
                continue
            if cross(b - a, p - a).is_zero():
                # p is on the segment's line; only a ray along that line can reach it
                if cross(d, b - a).is_zero():
                    ok = False
                    break
                continue
            ok = False
            break
        if ok:
            return d
        k += 1


def classify_point(P: Polyhedron, p: Point3) -> PointClass:
    feature = _boundary_feature(P, p)
    if feature is not None:
        return PointClass(ON_BOUNDARY, feature)
    d = free_direction(P, p)
    tip = p + d
    crossings = 0
    for poly in P.polygons:
        s = plane_hit_param(p, tip, poly.plane)
        if s is None or s <= 0:
            continue
        if point_in_polygon_2d(poly, lerp(p, tip, s)) == INSIDE:
            crossings += 1
    return PointClass(INTERIOR if crossings % 2 else EXTERIOR)


# --- point to point ------------------------------------------------------------


def _sees_in_polyhedron(P: Polyhedron, p: Point3, q: Point3) -> bool:
    ts: Set[Fraction] = {Fraction(0), Fraction(1)}
    for poly in P.polygons:
        t = plane_hit_param(p, q, poly.plane)
        if t is None or t <= 0 or t >= 1:
            continue
        where = point_in_polygon_2d(poly, lerp(p, q, t))
        if where == INSIDE:
            # a transversal pass through the inside of a facet changes sides
            return False
        if where != OUTSIDE:
            ts.add(t)
    for a, b in P.segments:
        ts.update(segment_meet_params(p, q, a, b))
    if len(ts) == 2:
        return True
    ordered = sorted(ts)
    seen: Set[str] = set()
    for lo, hi in zip(ordered, ordered[1:]):
        kind = classify_point(P, lerp(p, q, (lo + hi) / 2)).kind
        if kind == ON_BOUNDARY:
            continue
        seen.add(kind)
        if len(seen) == 2:
            return False
    return True


def sees_point(world: World, p: Point3, q: Point3) -> bool:
    if p == q:
        return True
    if world.is_polyhedron:
        return _sees_in_polyhedron(world, p, q)
    return not any(segment_crosses_polygon(p, q, poly) for poly in world.polygons)


def _open_segment_meets_edge(P: Polyhedron, p: Point3, x: Point3) -> bool:
    for edge in P.edges:
        ts = segment_meet_params(p, x, edge.a, edge.b)
        # two parameters mean a collinear overlap of positive length
        if len(ts) == 2 or any(0 < t < 1 for t in ts):
            return True
    return False


def sees_edge_point(world: World, p: Point3, x: Point3) -> bool:
    """Membership of x in the visible set of its edge."""
    if not sees_point(world, p, x):
        return False
    if world.is_polyhedron and x != p:
        return not _open_segment_meets_edge(world, p, x)
    return True


# --- point to edge -------------------------------------------------------------


def _in_triangle(p: Point3, a: Point3, b: Point3, n: Point3, y: Point3) -> bool:
    return (
        dot(cross(a - p, y - p), n) >= 0
        and dot(cross(b - a, y - a), n) >= 0
        and dot(cross(p - b, y - b), n) >= 0
    )


def _ray_param(p: Point3, a: Point3, b: Point3, n: Point3, y: Point3) -> Optional[Fraction]:
    denom = dot(cross(b - a, y - p), n)
    if denom == 0:
        return None
    return Fraction(-dot(cross(a - p, y - p), n)) / denom


def _shadow_params(p: Point3, a: Point3, b: Point3, n: Point3, c: Point3, d: Point3) -> List[Fraction]:
    """Parameters on ab where the shadow of segment cd, cast from p, begins or ends."""
    sc = sign(dot(n, c - p))
    sd = sign(dot(n, d - p))
    out: List[Fraction] = []
    if sc == 0 and sd == 0:
        for y in (c, d):
            if y != p and _in_triangle(p, a, b, n, y):
                t = _ray_param(p, a, b, n, y)
                if t is not None:
                    out.append(t)
        out.extend(segment_meet_params(a, b, c, d))
        return out
    if sc * sd > 0:
        return out
    if sc == 0:
        y = c
    elif sd == 0:
        y = d
    else:
        y = lerp(c, d, Fraction(dot(n, p - c)) / dot(n, d - c))
    if y != p and _in_triangle(p, a, b, n, y):
        t = _ray_param(p, a, b, n, y)
        if t is not None:
            out.append(t)
    return out


def edge_breakpoints(world: World, p: Point3, edge: WorldEdge) -> List[Fraction]:
    a, b = edge.a, edge.b
    ts: Set[Fraction] = {Fraction(0), Fraction(1)}
    for poly in world.polygons:
        t = plane_hit_param(a, b, poly.plane)
        if t is None or t < 0 or t > 1:
            continue
        if point_in_polygon_2d(poly, lerp(a, b, t)) != OUTSIDE:
            ts.add(t)
    n = cross(a - p, b - p)
    if n.is_zero():
        # p on the edge's line: everything happens along that line
        for c, d in world.segments:
            ts.update(segment_meet_params(a, b, c, d))
        tp = segment_param(p, a, b)
        if 0 <= tp <= 1:
            ts.add(tp)
    else:
        for c, d in world.segments:
            ts.update(t for t in _shadow_params(p, a, b, n, c, d) if 0 <= t <= 1)
    return sorted(ts)


def _is_world_vertex(world: World, x: Point3) -> bool:
    return x in world.vertex_ids


def visible_subsegments(world: World, p: Point3, e: str) -> VisibleSet:
    edge = world.edge_by_id.get(e)
    if edge is None:
        raise SceneError(f"unknown edge: {e}")
    ts = edge_breakpoints(world, p, edge)
    # cells alternate: point ts[0], open (ts[0], ts[1]), point ts[1], ...
    cells = []
    for i, t in enumerate(ts):
        cells.append((t, t, sees_edge_point(world, p, edge.point(t))))
        if i + 1 < len(ts):
            mid = (t + ts[i + 1]) * HALF
            cells.append((t, ts[i + 1], sees_edge_point(world, p, edge.point(mid))))
    logger.debug("edge %s: %d breakpoints", e, len(ts))

    intervals: List[ParamInterval] = []
    i = 0
    while i < len(cells):
        if not cells[i][2]:
            i += 1
            continue
        j = i
        while j + 1 < len(cells) and cells[j + 1][2]:
            j += 1
        start, end = cells[i], cells[j]
        interval = ParamInterval(
            start[0],
            end[1],
            lo_closed=start[0] == start[1],
            hi_closed=end[0] == end[1],
        )
        if interval.degenerate:
            x = edge.point(interval.lo)
            if x != p and not _is_world_vertex(world, x):
                message = f"isolated visible point on edge {e} at t={format_rat(interval.lo)} is not a vertex"
                if world.is_polyhedron:
                    raise InvariantViolation(message, {"edge": e, "t": format_rat(interval.lo), "point": point_list(p)})
                logger.warning(message)
        intervals.append(interval)
        i = j + 1
    return VisibleSet(e, tuple(intervals))


def visible_vertices(world: World, p: Point3) -> List[str]:
    return [vid for point, vid in world.vertex_ids.items() if sees_point(world, p, point)]


def sees_positive_portion(world: World, p: Point3, edge: WorldEdge) -> bool:
    """Whether p sees some open piece of the edge in the point-to-point sense."""
    ts = edge_breakpoints(world, p, edge)
    return any(sees_point(world, p, edge.point((lo + hi) * HALF)) for lo, hi in zip(ts, ts[1:]))


def _positive_portion(world: World, p: Point3, edge: WorldEdge, vs: VisibleSet) -> bool:
    if vs.positive:
        return True
    # on the edge's own line the visible set treats the edge as its own blocker
    return cross(edge.a - p, edge.b - p).is_zero() and sees_positive_portion(world, p, edge)


@dataclass
class VisibilityReport:
    point: Point3
    visible_sets: List[VisibleSet]
    visible_vertices: List[str]
    weak_count: int
    positive_count: int
    segment_count: int
    point_class: Optional[PointClass] = None
    split_edges: List[str] = field(default_factory=list)
    positive_edges: List[str] = field(default_factory=list)

    def visible_set(self, edge_id: str) -> VisibleSet:
        return next(vs for vs in self.visible_sets if vs.edge == edge_id)

    def to_dict(self) -> Dict:
        payload = {
            "point": point_list(self.point),
            "visible_vertices": list(self.visible_vertices),
            "edges": [vs.to_dict() for vs in self.visible_sets if not vs.is_empty],
            "weak_count": self.weak_count,
            "positive_count": self.positive_count,
            "segment_count": self.segment_count,
            "split_edges": list(self.split_edges),
            "positive_edges": list(self.positive_edges),
        }
        if self.point_class is not None:
            payload["point_class"] = self.point_class.to_dict()
        return payload


def visibility_report(world: World, p: Point3) -> VisibilityReport:
    sets = [visible_subsegments(world, p, edge.id) for edge in world.edges]
    seen_vertices = visible_vertices(world, p)
    seen_points = {world.vertices[vid] for vid in seen_vertices}
    weak = 0
    for edge, vs in zip(world.edges, sets):
        if not vs.is_empty or edge.a in seen_points or edge.b in seen_points:
            weak += 1
    positive_edges = [edge.id for edge, vs in zip(world.edges, sets) if _positive_portion(world, p, edge, vs)]
    segments = sum(len(vs.intervals) for vs in sets)
    split = [vs.edge for vs in sets if len(vs.positive) >= 2]
    point_class = classify_point(world, p) if world.is_polyhedron else None
    return VisibilityReport(
        p, sets, seen_vertices, weak, len(positive_edges), segments, point_class, split, positive_edges
    )


@dataclass(frozen=True)
class EdgeCounts:
    weak: int
    positive: int
    segments: int


def count_visible_edges(world: World, p: Point3, report: Optional[VisibilityReport] = None) -> EdgeCounts:
    report = report or visibility_report(world, p)
    return EdgeCounts(report.weak_count, report.positive_count, report.segment_count)


def detect_split_edge(world: World, p: Point3, report: Optional[VisibilityReport] = None) -> Optional[str]:
    report = report or visibility_report(world, p)
    return report.split_edges[0] if report.split_edges else None


def visible_sets_by_edge(sets: Iterable[VisibleSet]) -> Dict[str, VisibleSet]:
    return {vs.edge: vs for vs in sets}
