from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from core.errors import GeometryError, SceneError, SceneParseError
from core.exact_geom import (
    INSIDE,
    ORIGIN,
    Plane,
    Point3,
    cross,
    det3,
    dot,
    drop_axis,
    lerp,
    orient2d,
    parse_rat,
    point_in_polygon_2d,
    side_of_plane,
    segments_touch_2d,
    to_2d,
)
from core.storage import dumps, parse_point, point_list, read_document

logger = logging.getLogger(__name__)

Segment = Tuple[Point3, Point3]


@dataclass(frozen=True)
class Polygon:
    id: str
    vertices: Tuple[Point3, ...]

    @cached_property
    def newell_normal(self) -> Point3:
        nx_, ny, nz = Fraction(0), Fraction(0), Fraction(0)
        verts = self.vertices
        for i, a in enumerate(verts):
            b = verts[(i + 1) % len(verts)]
            nx_ += (a.y - b.y) * (a.z + b.z)
            ny += (a.z - b.z) * (a.x + b.x)
            nz += (a.x - b.x) * (a.y + b.y)
        return Point3(nx_, ny, nz)

    @cached_property
    def plane(self) -> Plane:
        normal = self.newell_normal
        if normal.is_zero():
            raise GeometryError(f"polygon {self.id} has no supporting plane")
        return Plane.from_normal(normal, self.vertices[0])

    @property
    def edges(self) -> List[Tuple[int, int]]:
        n = len(self.vertices)
        return [(i, (i + 1) % n) for i in range(n)]

    @property
    def segments(self) -> List[Segment]:
        return [(self.vertices[i], self.vertices[j]) for i, j in self.edges]

    def loop_2d(self, axis: int) -> Tuple[Tuple, ...]:
        cache = self.__dict__.setdefault("_loops", {})
        if axis not in cache:
            cache[axis] = tuple(to_2d(v, axis) for v in self.vertices)
        return cache[axis]

    def to_dict(self) -> Dict:
        return {"id": self.id, "vertices": [point_list(v) for v in self.vertices]}


def make_polygon(pid: str, coords: Iterable[Sequence]) -> Polygon:
    return Polygon(pid, tuple(Point3.of(*c) for c in coords))


def polygon_problems(poly: Polygon) -> List[str]:
    verts = poly.vertices
    n = len(verts)
    if n < 3:
        return ["fewer than three vertices"]
    problems: List[str] = []
    if len(set(verts)) != n:
        problems.append("repeated vertex")
    if poly.newell_normal.is_zero():
        problems.append("vertices are collinear")
        return problems
    plane = poly.plane
    for i, v in enumerate(verts):
        if not plane.contains(v):
            problems.append(f"vertex {i} is off the polygon plane")
    if problems:
        return problems
    for i in range(n):
        prev, cur, nxt = verts[i - 1], verts[i], verts[(i + 1) % n]
        if cross(cur - prev, nxt - cur).is_zero():
            problems.append(f"collinear edges at vertex {i}")
    axis = drop_axis(plane.normal)
    loop = poly.loop_2d(axis)
    for i, j in combinations(range(n), 2):
        if j == i + 1 or (i == 0 and j == n - 1):
            continue
        if segments_touch_2d(loop[i], loop[(i + 1) % n], loop[j], loop[(j + 1) % n]):
            problems.append(f"edges {i} and {j} intersect")
    return problems


def triangulate(poly: Polygon) -> List[Tuple[Point3, Point3, Point3]]:
    """Ear clipping in the polygon's plane. Assumes a valid simple polygon."""
    axis = drop_axis(poly.plane.normal)
    pts = list(poly.vertices)
    loop = list(poly.loop_2d(axis))
    area2 = sum(loop[i][0] * loop[(i + 1) % len(loop)][1] - loop[(i + 1) % len(loop)][0] * loop[i][1] for i in range(len(loop)))
    turn = 1 if area2 > 0 else -1
    idx = list(range(len(pts)))
    triangles: List[Tuple[Point3, Point3, Point3]] = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 4 * len(pts) * len(pts):
            raise GeometryError(f"ear clipping stalled on polygon {poly.id}")
        m = len(idx)
        for k in range(m):
            ia, ib, ic = idx[k - 1], idx[k], idx[(k + 1) % m]
            a, b, c = loop[ia], loop[ib], loop[ic]
            o = orient2d(a, b, c)
            if o == 0:
                del idx[k]
                break
            if o != turn:
                continue
            blocked = False
            for other in idx:
                if other in (ia, ib, ic) or loop[other] in (a, b, c):
                    continue
                q = loop[other]
                if orient2d(a, b, q) * turn >= 0 and orient2d(b, c, q) * turn >= 0 and orient2d(c, a, q) * turn >= 0:
                    blocked = True
                    break
            if not blocked:
                triangles.append((pts[ia], pts[ib], pts[ic]))
                del idx[k]
                break
    if len(idx) == 3 and orient2d(loop[idx[0]], loop[idx[1]], loop[idx[2]]) != 0:
        triangles.append((pts[idx[0]], pts[idx[1]], pts[idx[2]]))
    return triangles


def _ccw(tri2d):
    a, b, c = tri2d
    return tri2d if orient2d(a, b, c) > 0 else (a, c, b)


def _separated(t1, t2) -> bool:
    for tri, other in ((t1, t2), (t2, t1)):
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            if all(orient2d(a, b, q) <= 0 for q in other):
                return True
    return False


def _coplanar_overlap(p: Polygon, q: Polygon) -> bool:
    axis = drop_axis(p.plane.normal)
    tris_p = [_ccw(tuple(to_2d(v, axis) for v in t)) for t in triangulate(p)]
    tris_q = [_ccw(tuple(to_2d(v, axis) for v in t)) for t in triangulate(q)]
    return any(not _separated(a, b) for a in tris_p for b in tris_q)


def _plane_cut_points(poly: Polygon, plane: Plane) -> List[Point3]:
    points: List[Point3] = []
    for a, b in poly.segments:
        sa = side_of_plane(plane, a)
        sb = side_of_plane(plane, b)
        if sa == 0:
            points.append(a)
        if sb == 0:
            points.append(b)
        if sa * sb < 0:
            t = Fraction(plane.evaluate(a)) / (plane.evaluate(a) - plane.evaluate(b))
            points.append(lerp(a, b, t))
    return points


def interiors_overlap(p: Polygon, q: Polygon) -> bool:
    """Exact test whether the relative interiors of two valid polygons meet."""
    if p.plane.same_as(q.plane):
        return _coplanar_overlap(p, q)
    if p.plane.is_parallel_to(q.plane):
        return False
    direction = cross(p.plane.normal, q.plane.normal)
    points = sorted(set(_plane_cut_points(p, q.plane) + _plane_cut_points(q, p.plane)), key=lambda v: dot(direction, v))
    for a, b in zip(points, points[1:]):
        if dot(direction, a) == dot(direction, b):
            continue
        mid = lerp(a, b, Fraction(1, 2))
        if point_in_polygon_2d(p, mid) == INSIDE and point_in_polygon_2d(q, mid) == INSIDE:
            return True
    return False


@dataclass(frozen=True)
class WorldEdge:
    id: str
    a: Point3
    b: Point3
    polygons: Tuple[str, ...]

    def point(self, t) -> Point3:
        return lerp(self.a, self.b, t)

    def to_dict(self) -> Dict:
        return {"id": self.id, "a": point_list(self.a), "b": point_list(self.b), "polygons": list(self.polygons)}


class Scene:
    """A nonempty set of polygons with pairwise disjoint relative interiors."""

    semantics = "scene"

    def __init__(self, polygons: Sequence[Polygon]):
        self.polygons: List[Polygon] = list(polygons)
        self.by_id: Dict[str, Polygon] = {poly.id: poly for poly in self.polygons}

    @property
    def is_polyhedron(self) -> bool:
        return False

    @cached_property
    def edges(self) -> List[WorldEdge]:
        edges = []
        for poly in self.polygons:
            for i, (a, b) in enumerate(poly.segments):
                edges.append(WorldEdge(f"{poly.id}.{i}", a, b, (poly.id,)))
        return edges

    @cached_property
    def edge_by_id(self) -> Dict[str, WorldEdge]:
        return {edge.id: edge for edge in self.edges}

    @cached_property
    def segments(self) -> List[Segment]:
        return [(poly.vertices[i], poly.vertices[j]) for poly in self.polygons for i, j in poly.edges]

    @cached_property
    def vertex_ids(self) -> Dict[Point3, str]:
        ids: Dict[Point3, str] = {}
        for poly in self.polygons:
            for i, v in enumerate(poly.vertices):
                ids.setdefault(v, f"{poly.id}.v{i}")
        return ids

    @property
    def vertices(self) -> Dict[str, Point3]:
        return {vid: point for point, vid in self.vertex_ids.items()}

    def bounding_box(self) -> Tuple[Point3, Point3]:
        pts = [v for poly in self.polygons for v in poly.vertices]
        lo = Point3(min(p.x for p in pts), min(p.y for p in pts), min(p.z for p in pts))
        hi = Point3(max(p.x for p in pts), max(p.y for p in pts), max(p.z for p in pts))
        return lo, hi

    def to_dict(self) -> Dict:
        payload: Dict = {"polygons": [poly.to_dict() for poly in self.polygons]}
        if self.is_polyhedron:
            payload["closed"] = True
        return payload

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.polygons == other.polygons

    def __hash__(self) -> int:
        return hash(tuple(self.polygons))


class Polyhedron(Scene):
    """Closed oriented surface made of facets.

    Coplanar facets may meet along a segment; such a "seam" is part of a face,
    not an edge. Edges are the creases between facets of distinct planes and
    vertices are the endpoints of creases.
    """

    semantics = "polyhedron"

    @property
    def is_polyhedron(self) -> bool:
        return True

    @cached_property
    def segment_uses(self) -> Dict[frozenset, List[Tuple[str, int, Point3, Point3]]]:
        uses: Dict[frozenset, List[Tuple[str, int, Point3, Point3]]] = {}
        for poly in self.polygons:
            for i, (a, b) in enumerate(poly.segments):
                uses.setdefault(frozenset((a, b)), []).append((poly.id, i, a, b))
        return uses

    def _is_crease(self, users) -> bool:
        if len(users) != 2:
            return True
        first, second = self.by_id[users[0][0]], self.by_id[users[1][0]]
        return not first.plane.same_as(second.plane)

    @cached_property
    def edges(self) -> List[WorldEdge]:
        edges = []
        for users in self.segment_uses.values():
            if not self._is_crease(users):
                continue
            pid, i, a, b = users[0]
            edges.append(WorldEdge(f"{pid}.{i}", a, b, tuple(u[0] for u in users)))
        return edges

    @cached_property
    def seams(self) -> List[Segment]:
        return [(users[0][2], users[0][3]) for users in self.segment_uses.values() if not self._is_crease(users)]

    @cached_property
    def segments(self) -> List[Segment]:
        return [(users[0][2], users[0][3]) for users in self.segment_uses.values()]

    @cached_property
    def vertex_ids(self) -> Dict[Point3, str]:
        corners = {p for edge in self.edges for p in (edge.a, edge.b)}
        ids: Dict[Point3, str] = {}
        for poly in self.polygons:
            for i, v in enumerate(poly.vertices):
                if v in corners:
                    ids.setdefault(v, f"{poly.id}.v{i}")
        return ids

    def signed_volume(self) -> Fraction:
        total = Fraction(0)
        for poly in self.polygons:
            v0 = poly.vertices[0]
            for i in range(1, len(poly.vertices) - 1):
                total += det3(v0, poly.vertices[i], poly.vertices[i + 1])
        return total / 6


World = Union[Scene, Polyhedron]


@dataclass
class ValidationReport:
    problems: List[Dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def add(self, kind: str, polygons: Sequence[str], detail: str = "") -> None:
        self.problems.append({"kind": kind, "polygons": list(polygons), "detail": detail})

    def to_dict(self) -> Dict:
        return {"valid": self.ok, "problems": self.problems}


def _boxes_meet(p: Polygon, q: Polygon) -> bool:
    for attr in ("x", "y", "z"):
        pv = [getattr(v, attr) for v in p.vertices]
        qv = [getattr(v, attr) for v in q.vertices]
        if max(pv) < min(qv) or max(qv) < min(pv):
            return False
    return True


def validate_scene(s: Scene) -> ValidationReport:
    report = ValidationReport()
    if not s.polygons:
        report.add("empty", [], "a scene needs at least one polygon")
        return report
    seen: Dict[str, int] = {}
    for poly in s.polygons:
        seen[poly.id] = seen.get(poly.id, 0) + 1
    for pid, count in seen.items():
        if count > 1:
            report.add("duplicate_id", [pid], f"id used {count} times")
    good: List[Polygon] = []
    for poly in s.polygons:
        issues = polygon_problems(poly)
        for issue in issues:
            report.add("polygon", [poly.id], issue)
        if not issues:
            good.append(poly)
    for p, q in combinations(good, 2):
        if not _boxes_meet(p, q):
            continue
        if interiors_overlap(p, q):
            report.add("overlap", [p.id, q.id], "relative interiors intersect")
    logger.debug("validated %d polygons, %d problems", len(s.polygons), len(report.problems))
    return report


def manifold_problems(P: Polyhedron) -> ValidationReport:
    report = ValidationReport()
    for users in P.segment_uses.values():
        a, b = users[0][2], users[0][3]
        where = f"segment {point_list(a)}-{point_list(b)}"
        if len(users) != 2:
            report.add("manifold", [u[0] for u in users], f"{where} is used by {len(users)} facets")
            continue
        if users[0][2] != users[1][3] or users[0][3] != users[1][2]:
            report.add("orientation", [u[0] for u in users], f"{where} is traversed twice in the same direction")
    graph = nx.Graph()
    graph.add_nodes_from(poly.id for poly in P.polygons)
    for users in P.segment_uses.values():
        for (pa, *_), (pb, *_) in combinations(users, 2):
            graph.add_edge(pa, pb)
    if graph.number_of_nodes() and not nx.is_connected(graph):
        report.add("connectivity", [], "facets do not form one connected surface")
    return report


def validate_polyhedron(P: Polyhedron) -> ValidationReport:
    report = validate_scene(P)
    report.problems.extend(manifold_problems(P).problems)
    if report.ok and P.signed_volume() <= 0:
        report.add("orientation", [], "facet normals do not point outward")
    return report


def validate_world(world: World) -> ValidationReport:
    if world.is_polyhedron:
        return validate_polyhedron(world)
    return validate_scene(world)


# --- isometries -------------------------------------------------------------


@dataclass(frozen=True)
class Isometry:
    matrix: Tuple[Tuple[Fraction, ...], ...]
    translation: Point3 = ORIGIN

    @classmethod
    def linear(cls, rows: Sequence[Sequence]) -> "Isometry":
        return cls(tuple(tuple(Fraction(v) for v in row) for row in rows))

    @classmethod
    def translate(cls, x, y, z) -> "Isometry":
        return cls(IDENTITY.matrix, Point3.of(x, y, z))

    def apply(self, p: Point3) -> Point3:
        m = self.matrix
        t = self.translation
        return Point3(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + t.x,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + t.y,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + t.z,
        )

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other."""
        a, b = self.matrix, other.matrix
        rows = tuple(tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)) for i in range(3))
        linear = Isometry(rows)
        return Isometry(rows, linear.apply(other.translation) + self.translation)

    def power(self, n: int) -> "Isometry":
        result = IDENTITY
        for _ in range(n):
            result = self.compose(result)
        return result

    def is_orthogonal(self) -> bool:
        m = self.matrix
        for i in range(3):
            for j in range(3):
                value = sum(m[i][k] * m[j][k] for k in range(3))
                if value != (1 if i == j else 0):
                    return False
        return True

    def is_identity(self) -> bool:
        return self == IDENTITY


IDENTITY = Isometry(tuple(tuple(Fraction(int(i == j)) for j in range(3)) for i in range(3)))
# (x, y, z) -> (x, -y, -z)
HALF_TURN_X = Isometry.linear([[1, 0, 0], [0, -1, 0], [0, 0, -1]])
# (x, y, z) -> (-x, -z, y), order four and orientation reversing
QUARTER_TURN_FLIP = Isometry.linear([[-1, 0, 0], [0, 0, -1], [0, 1, 0]])


def _same_loop(a: Sequence[Point3], b: Sequence[Point3]) -> bool:
    if len(a) != len(b) or set(a) != set(b):
        return False
    n = len(a)
    try:
        start = list(b).index(a[0])
    except ValueError:
        return False
    forward = all(a[i] == b[(start + i) % n] for i in range(n))
    backward = all(a[i] == b[(start - i) % n] for i in range(n))
    return forward or backward


def polygon_image_map(s: Scene, iso: Isometry) -> Optional[Dict[str, str]]:
    """Polygon id -> id of its image under iso, or None when iso does not permute the set."""
    if not iso.is_orthogonal():
        return None
    mapping: Dict[str, str] = {}
    used: set = set()
    for poly in s.polygons:
        image = [iso.apply(v) for v in poly.vertices]
        match = next(
            (q.id for q in s.polygons if q.id not in used and _same_loop(image, q.vertices)),
            None,
        )
        if match is None:
            return None
        mapping[poly.id] = match
        used.add(match)
    return mapping


def check_symmetry(s: Scene, iso: Isometry) -> bool:
    return polygon_image_map(s, iso) is not None


# --- builtins ---------------------------------------------------------------

BRUSH_MARGIN = 4
BRUSH_CELL = 4
BRUSH_BASE_HEIGHT = 2
# tall spikes keep the view from a tip through its hole clear of the floor edges
BRUSH_SPIKE_HEIGHT = 8


@dataclass(frozen=True)
class Builtin:
    name: str
    kind: str  # scene/polyhedron
    params: Tuple[Tuple[str, Fraction], ...]
    description: str
    factory: Callable[..., Scene]


def _tetrahedron() -> Polyhedron:
    corners = [Point3.of(1, 1, 1), Point3.of(1, -1, -1), Point3.of(-1, 1, -1), Point3.of(-1, -1, 1)]
    facets = []
    for omitted in range(4):
        a, b, c = [corners[i] for i in range(4) if i != omitted]
        if det3(b - a, c - a, corners[omitted] - a) > 0:
            b, c = c, b
        facets.append(Polygon(f"F{omitted}", (a, b, c)))
    return Polyhedron(facets)


def _cube(scale: Fraction = Fraction(1)) -> Polyhedron:
    if scale <= 0:
        raise SceneError("cube scale must be positive")
    s = scale

    def quad(pid, corners):
        return Polygon(pid, tuple(Point3(i * s, j * s, k * s) for i, j, k in corners))

    return Polyhedron(
        [
            quad("x0", [(0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)]),
            quad("x1", [(1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)]),
            quad("y0", [(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)]),
            quad("y1", [(0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)]),
            quad("z0", [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)]),
            quad("z1", [(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)]),
        ]
    )


def brush_tip(k: int, i: int = 0, j: int = 0, depth: Fraction = Fraction(1, 10)) -> Point3:
    """A point just below the apex of spike (i, j) of brush(k)."""
    ox = BRUSH_MARGIN + BRUSH_CELL * i
    oy = BRUSH_MARGIN + BRUSH_CELL * j
    return Point3(Fraction(ox + 2), Fraction(oy) + Fraction(5, 3), BRUSH_BASE_HEIGHT + BRUSH_SPIKE_HEIGHT - depth)


def _brush(k: Fraction = Fraction(2)) -> Polyhedron:
    if k.denominator != 1 or k < 1:
        raise SceneError("brush needs a positive integer k")
    k = int(k)
    m, c, h, tall = BRUSH_MARGIN, BRUSH_CELL, BRUSH_BASE_HEIGHT, BRUSH_SPIKE_HEIGHT
    w = 2 * m + c * k

    def top(x, y) -> Point3:
        return Point3.of(x, y, h)

    facets: List[Polygon] = [
        make_polygon("wall_s", [(0, 0, 0), (w, 0, 0), (w, 0, h), (0, 0, h)]),
        make_polygon("wall_e", [(w, 0, 0), (w, w, 0), (w, w, h), (w, 0, h)]),
        make_polygon("wall_n", [(w, w, 0), (0, w, 0), (0, w, h), (w, w, h)]),
        make_polygon("wall_w", [(0, w, 0), (0, 0, 0), (0, 0, h), (0, w, h)]),
        make_polygon("floor", [(0, 0, 0), (0, w, 0), (w, w, 0), (w, 0, 0)]),
    ]

    # the margin of the top face as four fans, one per side, related by quarter turns
    def rotate(x, y, times):
        for _ in range(times):
            x, y = w - y, x
        return x, y

    inner = [(m + c * t, m) for t in range(k + 1)]
    for side in range(4):
        o0, o1 = rotate(0, 0, side), rotate(w, 0, side)
        ring = [rotate(x, y, side) for x, y in inner]
        facets.append(Polygon(f"rim{side}_0", (top(*o0), top(*o1), top(*ring[k]))))
        for t in range(k):
            facets.append(Polygon(f"rim{side}_{t + 1}", (top(*o0), top(*ring[t + 1]), top(*ring[t]))))

    for i in range(k):
        for j in range(k):
            ox, oy = m + c * i, m + c * j
            p00, p10, p11, p01 = top(ox, oy), top(ox + c, oy), top(ox + c, oy + c), top(ox, oy + c)
            a, b, cc = top(ox + 1, oy + 1), top(ox + 3, oy + 1), top(ox + 2, oy + 3)
            apex = Point3(Fraction(ox + 2), Fraction(oy) + Fraction(5, 3), Fraction(h + tall))
            tag = f"{i}_{j}"
            facets.extend(
                [
                    Polygon(f"cell{tag}_s", (p00, p10, b, a)),
                    Polygon(f"cell{tag}_e", (p10, p11, cc, b)),
                    Polygon(f"cell{tag}_nw", (p11, p01, p00, a, cc)),
                    Polygon(f"spike{tag}_s", (a, b, apex)),
                    Polygon(f"spike{tag}_e", (b, cc, apex)),
                    Polygon(f"spike{tag}_w", (cc, a, apex)),
                ]
            )
    return Polyhedron(facets)


EIGHT_EDGE_POLYGONS = {
    "R1": [(5, -1, -15), (5, 1, -15), (5, 1, 15), (5, -1, 15)],
    "R2": [(-5, -15, -1), (-5, 15, -1), (-5, 15, 1), (-5, -15, 1)],
    "T1": [(15, -2, 35), (7, 0, -8), (-7, -8, 3)],
    "T2": [(-15, -35, -2), (-7, 8, 0), (7, -3, -8)],
    "T3": [(15, 2, -35), (7, 0, 8), (-7, 8, -3)],
    "T4": [(-15, 35, 2), (-7, -8, 0), (7, 3, 8)],
}


def _eight_edge_scene() -> Scene:
    return Scene([make_polygon(pid, coords) for pid, coords in EIGHT_EDGE_POLYGONS.items()])


def build_builtins() -> List[Builtin]:
    return [
        Builtin("tetrahedron", "polyhedron", (), "regular tetrahedron on alternate cube corners", _tetrahedron),
        Builtin("cube", "polyhedron", (("scale", Fraction(1)),), "axis-aligned cube [0, scale]^3", _cube),
        Builtin("brush", "polyhedron", (("k", Fraction(2)),), "box with a k x k grid of tetrahedral spikes", _brush),
        Builtin("eight_edge_scene", "scene", (), "six polygons hiding every vertex from the origin", _eight_edge_scene),
    ]


_CALL_SYNTAX = re.compile(r"^(\w+)\((.*)\)$")


def builtin(name: str, params: Optional[Dict[str, Union[Fraction, str, int]]] = None) -> Scene:
    params = dict(params or {})
    match = _CALL_SYNTAX.match(name.strip())
    registry = {entry.name: entry for entry in build_builtins()}
    if match:
        name = match.group(1)
        entry = registry.get(name)
        if entry is None or not entry.params:
            raise SceneError(f"unknown builtin: {name}")
        params.setdefault(entry.params[0][0], match.group(2))
    entry = registry.get(name)
    if entry is None:
        raise SceneError(f"unknown builtin: {name}")
    allowed = dict(entry.params)
    kwargs: Dict[str, Fraction] = {}
    for key, value in params.items():
        if key not in allowed:
            raise SceneError(f"builtin {name} has no parameter {key!r}")
        try:
            kwargs[key] = value if isinstance(value, Fraction) else parse_rat(value)
        except ValueError as exc:
            raise SceneError(f"invalid value for {key}: {exc}") from exc
    return entry.factory(**kwargs)


# --- files ------------------------------------------------------------------


def scene_from_dict(payload: Dict) -> Scene:
    if not isinstance(payload, dict):
        raise SceneParseError("scene document must be an object")
    raw = payload.get("polygons")
    if not isinstance(raw, list):
        raise SceneParseError("missing polygon list", field="polygons")
    polygons: List[Polygon] = []
    for i, item in enumerate(raw):
        where = f"polygons[{i}]"
        if not isinstance(item, dict):
            raise SceneParseError("polygon must be an object", field=where)
        pid = item.get("id")
        if not isinstance(pid, str) or not pid:
            raise SceneParseError("polygon id must be a nonempty string", field=f"{where}.id")
        verts = item.get("vertices")
        if not isinstance(verts, list) or len(verts) < 3:
            raise SceneParseError("polygon needs at least three vertices", field=f"{where}.vertices")
        points = tuple(parse_point(v, f"{where}.vertices[{j}]") for j, v in enumerate(verts))
        polygons.append(Polygon(pid, points))
    closed = payload.get("closed", False)
    if not isinstance(closed, bool):
        raise SceneParseError("closed must be a boolean", field="closed")
    if not polygons:
        raise SceneParseError("a scene needs at least one polygon", field="polygons")
    if not closed:
        return Scene(polygons)
    solid = Polyhedron(polygons)
    bad = manifold_problems(solid)
    if not bad.ok:
        first = bad.problems[0]
        raise SceneError(f"not a closed surface: {first['detail']}")
    return solid


def load_scene(path: Path) -> Scene:
    return scene_from_dict(read_document(Path(path)))


def save_scene(s: Scene, path: Path) -> None:
    Path(path).write_text(dumps(s.to_dict()), encoding="utf-8")


def load_world(scene_path: Optional[str], builtin_name: Optional[str], params: Optional[Dict] = None) -> Scene:
    if scene_path:
        return load_scene(Path(scene_path))
    if builtin_name:
        return builtin(builtin_name, params)
    raise SceneError("either a scene file or a builtin name is required")
