"""Projection of visible edge pieces onto the sphere around a viewpoint.

Points of the sphere are ``Dir3`` values; arcs are stored by their endpoints and
the normal of their great circle (oriented so that u -> v runs counterclockwise
around it). All tests are sign tests on integer or rational vectors.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

from core.errors import GeometryError, InvariantViolation, SceneParseError
from core.exact_geom import Dir3, Point3, cross, det3, dot, format_rat, is_parallel, parse_rat
from core.scene_model import World
from core.storage import parse_point, point_list, read_document
from core.visibility_engine import VisibilityReport, visibility_report

logger = logging.getLogger(__name__)

Endpoint = Tuple[int, int]  # (arc id, 0 for u / 1 for v)


@dataclass(frozen=True)
class Arc:
    id: int
    normal: Dir3
    u: Dir3
    v: Dir3
    source_edge: Optional[str] = None
    t_lo: Optional[Fraction] = None
    t_hi: Optional[Fraction] = None

    def endpoint(self, end: int) -> Dir3:
        return self.v if end else self.u

    def to_dict(self) -> Dict:
        return {
            "id": self.id,
            "normal": self.normal.to_list(),
            "u": self.u.to_list(),
            "v": self.v.to_list(),
            "source_edge": self.source_edge,
            "t_lo": None if self.t_lo is None else format_rat(self.t_lo),
            "t_hi": None if self.t_hi is None else format_rat(self.t_hi),
        }


def make_arc(arc_id: int, u: Dir3, v: Dir3, **source) -> Arc:
    n = cross(u, v)
    if n.is_zero():
        raise GeometryError(f"arc {arc_id} has equal or antipodal endpoints")
    return Arc(arc_id, Dir3.of(n), u, v, **source)


def on_arc(arc: Arc, d) -> bool:
    n = arc.normal
    if dot(n, d) != 0:
        return False
    return dot(cross(arc.u, d), n) >= 0 and dot(cross(d, arc.v), n) >= 0


def in_relint(arc: Arc, d) -> bool:
    n = arc.normal
    if dot(n, d) != 0:
        return False
    return dot(cross(arc.u, d), n) > 0 and dot(cross(d, arc.v), n) > 0


def travel_tangent(arc: Arc, q, end: int) -> Point3:
    """Tangent at q when moving along the arc toward endpoint ``end``."""
    return cross(arc.normal, q) if end else cross(q, arc.normal)


def order_along(normal, points: Sequence[Dir3]) -> List[Dir3]:
    """Sort points of a sub-semicircular stretch of a great circle counterclockwise about normal."""

    def cmp(d1, d2) -> int:
        s = dot(cross(d1, d2), normal)
        return -1 if s > 0 else (1 if s < 0 else 0)

    return sorted(points, key=cmp_to_key(cmp))


def project(p: Point3, q: Point3) -> Dir3:
    if p == q:
        raise GeometryError("cannot project the viewpoint onto its own sphere")
    return Dir3.of(q - p)


def compute_hosts(arcs: Sequence[Arc]) -> Dict[Endpoint, Tuple[int, ...]]:
    hosts: Dict[Endpoint, Tuple[int, ...]] = {}
    for arc in arcs:
        for end in (0, 1):
            q = arc.endpoint(end)
            hosts[(arc.id, end)] = tuple(other.id for other in arcs if other.id != arc.id and in_relint(other, q))
    return hosts


@dataclass
class VisMap:
    viewpoint: Optional[Point3]
    arcs: List[Arc]
    hosts: Dict[Endpoint, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.hosts:
            self.hosts = compute_hosts(self.arcs)
        self._by_id = {arc.id: arc for arc in self.arcs}

    def arc(self, arc_id: int) -> Arc:
        return self._by_id[arc_id]

    def host(self, arc_id: int, end: int) -> Optional[int]:
        found = self.hosts.get((arc_id, end), ())
        return found[0] if found else None

    @property
    def feeds_into(self) -> List[Tuple[int, int]]:
        pairs = {(arc_id, host) for (arc_id, _), hosted in self.hosts.items() for host in hosted}
        return sorted(pairs)

    @property
    def source_edges(self) -> List[str]:
        seen: List[str] = []
        for arc in self.arcs:
            if arc.source_edge is not None and arc.source_edge not in seen:
                seen.append(arc.source_edge)
        return seen

    def to_dict(self) -> Dict:
        return {
            "viewpoint": point_list(self.viewpoint) if self.viewpoint is not None else None,
            "arcs": [arc.to_dict() for arc in self.arcs],
            "feeds_into": [list(pair) for pair in self.feeds_into],
        }


class SOD(VisMap):
    """A visibility map whose arcs passed the diagram axioms."""


@dataclass
class SodFailure:
    vertex: str
    visible_vertices: List[str]

    def to_dict(self) -> Dict:
        return {"status": "failure", "reason": "visible_vertex", "vertex": self.vertex, "visible_vertices": self.visible_vertices}


def build_vismap(world: World, p: Point3, report: Optional[VisibilityReport] = None) -> VisMap:
    report = report or visibility_report(world, p)
    arcs: List[Arc] = []
    for edge in world.edges:
        for iv in report.visible_set(edge.id).positive:
            u = project(p, edge.point(iv.lo))
            v = project(p, edge.point(iv.hi))
            if is_parallel(u, v):
                logger.debug("edge %s is seen end-on, no arc", edge.id)
                continue
            arcs.append(make_arc(len(arcs), u, v, source_edge=edge.id, t_lo=iv.lo, t_hi=iv.hi))
    return VisMap(p, arcs)


def build_sod(world: World, p: Point3, report: Optional[VisibilityReport] = None) -> Union[SOD, SodFailure]:
    from core.sod_analysis import check_axioms

    report = report or visibility_report(world, p)
    if report.visible_vertices:
        return SodFailure(report.visible_vertices[0], list(report.visible_vertices))
    vismap = build_vismap(world, p, report)
    axioms = check_axioms(vismap)
    if not axioms.passed:
        raise InvariantViolation(
            "visibility map of a vertex-free viewpoint violates the diagram axioms",
            {"point": point_list(p), "axioms": axioms.to_dict()},
        )
    logger.info("built SOD with %d arcs from %d edges", len(vismap.arcs), len(vismap.source_edges))
    return SOD(vismap.viewpoint, vismap.arcs, vismap.hosts)


# --- faces -----------------------------------------------------------------------

HalfEdge = Tuple[int, Dir3, Dir3]  # (arc id, from, to)


@dataclass(frozen=True)
class FaceStep:
    arc: int
    start: Dir3
    end: Dir3
    forward: bool

    def to_dict(self) -> Dict:
        return {"arc": self.arc, "from": self.start.to_list(), "to": self.end.to_list(), "forward": self.forward}


@dataclass
class SphereFace:
    id: int
    boundary: List[FaceStep]

    @property
    def vertices(self) -> List[Dir3]:
        return [step.start for step in self.boundary]

    def to_dict(self) -> Dict:
        return {"id": self.id, "boundary": [step.to_dict() for step in self.boundary]}


@dataclass
class Arrangement:
    faces: List[SphereFace]
    face_of: Dict[HalfEdge, int]
    pieces: Dict[int, List[Dir3]]  # arc id -> breakpoints from u to v
    components: int

    def piece_ending_at(self, arc_id: int, end: int) -> HalfEdge:
        """Half-edge of the last piece when travelling along the arc toward ``end``."""
        chain = self.pieces[arc_id]
        if end:
            return (arc_id, chain[-2], chain[-1])
        return (arc_id, chain[1], chain[0])


def build_arrangement(m: VisMap) -> Arrangement:
    if not m.arcs:
        return Arrangement([SphereFace(0, [])], {}, {}, 0)
    points = {arc.endpoint(end) for arc in m.arcs for end in (0, 1)}
    outgoing: Dict[Dir3, List[HalfEdge]] = {}
    pieces: Dict[int, List[Dir3]] = {}
    order: List[HalfEdge] = []
    forward: Dict[HalfEdge, bool] = {}
    graph = nx.Graph()
    for arc in m.arcs:
        inner = [q for q in points if q != arc.u and q != arc.v and in_relint(arc, q)]
        chain = [arc.u] + order_along(arc.normal, inner) + [arc.v]
        pieces[arc.id] = chain
        for s, t in zip(chain, chain[1:]):
            for h, fwd in (((arc.id, s, t), True), ((arc.id, t, s), False)):
                outgoing.setdefault(h[1], []).append(h)
                forward[h] = fwd
                order.append(h)
            graph.add_edge(s, t)

    def tangent(h: HalfEdge) -> Point3:
        arc = m.arc(h[0])
        return travel_tangent(arc, h[1], 1 if forward[h] else 0)

    ring: Dict[Dir3, List[HalfEdge]] = {}
    for q, hs in outgoing.items():
        ref = tangent(hs[0])

        def half(t) -> int:
            s = det3(q, ref, t)
            return 0 if s > 0 or (s == 0 and dot(ref, t) > 0) else 1

        def cmp(h1, h2) -> int:
            t1, t2 = tangent(h1), tangent(h2)
            a1, a2 = half(t1), half(t2)
            if a1 != a2:
                return a1 - a2
            s = det3(q, t1, t2)
            return -1 if s > 0 else (1 if s < 0 else 0)

        ring[q] = sorted(hs, key=cmp_to_key(cmp))

    def next_half_edge(h: HalfEdge) -> HalfEdge:
        arc_id, s, t = h
        around = ring[t]
        i = around.index((arc_id, t, s))
        return around[i - 1]

    faces: List[SphereFace] = []
    face_of: Dict[HalfEdge, int] = {}
    for start in order:
        if start in face_of:
            continue
        fid = len(faces)
        steps: List[FaceStep] = []
        h = start
        while h not in face_of:
            face_of[h] = fid
            steps.append(FaceStep(h[0], h[1], h[2], forward[h]))
            h = next_half_edge(h)
        faces.append(SphereFace(fid, steps))
    components = nx.number_connected_components(graph)
    if components > 1:
        logger.warning("arc union has %d components; boundary cycles overcount faces", components)
    return Arrangement(faces, face_of, pieces, components)


def enumerate_faces(m: VisMap) -> List[SphereFace]:
    return build_arrangement(m).faces


# --- semicircles -----------------------------------------------------------------


@dataclass(frozen=True)
class GreatSemicircle:
    normal: Dir3
    selector: Dir3
    source_edge: Optional[str] = None

    def __post_init__(self):
        if dot(self.normal, self.selector) != 0:
            raise GeometryError("semicircle selector must be orthogonal to the circle normal")

    def contains_relint(self, d) -> bool:
        return dot(self.normal, d) == 0 and dot(self.selector, d) > 0

    def to_dict(self) -> Dict:
        return {"normal": self.normal.to_list(), "selector": self.selector.to_list(), "source_edge": self.source_edge}


def semicircle_meets_arc(sc: GreatSemicircle, arc: Arc) -> bool:
    if is_parallel(sc.normal, arc.normal):
        # a stretch shorter than a semicircle that enters the open half must have an end there
        return dot(arc.u, sc.selector) > 0 or dot(arc.v, sc.selector) > 0
    w = cross(sc.normal, arc.normal)
    return any(dot(c, sc.selector) > 0 and on_arc(arc, c) for c in (w, -w))


def random_direction(rng: random.Random, bound: int) -> Point3:
    while True:
        d = Point3(rng.randint(-bound, bound), rng.randint(-bound, bound), rng.randint(-bound, bound))
        if not d.is_zero():
            return d


def random_semicircle(rng: random.Random, bound: int = 20) -> GreatSemicircle:
    n = random_direction(rng, bound)
    while True:
        r = random_direction(rng, bound)
        m = cross(n, r)
        if not m.is_zero():
            return GreatSemicircle(Dir3.of(n), Dir3.of(m))


@dataclass
class PierceReport:
    samples: int
    counterexamples: List[GreatSemicircle] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> Dict:
        return {"samples": self.samples, "counterexamples": [sc.to_dict() for sc in self.counterexamples]}


def semicircle_pierce_test(m: VisMap, samples: int, seed: int, bound: int = 20) -> PierceReport:
    rng = random.Random(seed)
    report = PierceReport(samples)
    for _ in range(samples):
        sc = random_semicircle(rng, bound)
        if not any(semicircle_meets_arc(sc, arc) for arc in m.arcs):
            report.counterexamples.append(sc)
    return report


# --- files -----------------------------------------------------------------------


def vismap_to_dict(m: VisMap) -> Dict:
    return m.to_dict()


def _parse_dir(values, where: str) -> Dir3:
    vec = parse_point(values, where)
    if vec.is_zero():
        raise SceneParseError("direction must be nonzero", field=where)
    return Dir3.of(vec)


def vismap_from_dict(payload: Dict) -> VisMap:
    if not isinstance(payload, dict):
        raise SceneParseError("SOD document must be an object")
    raw = payload.get("arcs")
    if not isinstance(raw, list):
        raise SceneParseError("missing arc list", field="arcs")
    viewpoint = payload.get("viewpoint")
    point = parse_point(viewpoint, "viewpoint") if viewpoint is not None else None
    arcs: List[Arc] = []
    seen_ids = set()
    for i, item in enumerate(raw):
        where = f"arcs[{i}]"
        if not isinstance(item, dict):
            raise SceneParseError("arc must be an object", field=where)
        arc_id = item.get("id", i)
        if not isinstance(arc_id, int) or isinstance(arc_id, bool) or arc_id in seen_ids:
            raise SceneParseError("arc id must be a unique integer", field=f"{where}.id")
        seen_ids.add(arc_id)
        u = _parse_dir(item.get("u"), f"{where}.u")
        v = _parse_dir(item.get("v"), f"{where}.v")
        span = cross(u, v)
        if "normal" in item and item["normal"] is not None:
            normal = _parse_dir(item["normal"], f"{where}.normal")
            if not span.is_zero() and Dir3.of(span) != normal:
                raise SceneParseError("normal does not match u x v", field=f"{where}.normal")
        elif span.is_zero():
            raise SceneParseError("arc endpoints are equal or antipodal and no normal is given", field=where)
        else:
            normal = Dir3.of(span)
        source = {}
        if item.get("source_edge") is not None:
            source["source_edge"] = str(item["source_edge"])
        for key in ("t_lo", "t_hi"):
            if item.get(key) is not None:
                try:
                    source[key] = parse_rat(item[key])
                except ValueError as exc:
                    raise SceneParseError(str(exc), field=f"{where}.{key}") from exc
        arcs.append(Arc(arc_id, normal, u, v, **source))
    return VisMap(point, arcs)


def load_vismap(path: Path) -> VisMap:
    return vismap_from_dict(read_document(Path(path)))
