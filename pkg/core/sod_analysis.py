"""Structure of spherical occlusion diagrams: axioms, swirls, graphs, covers.

Turn convention: standing on the sphere seen from outside, a walk turns left
(counterclockwise) at q when det(q, t_in, t_out) > 0. Swirls that always turn
left are "ccw", those that always turn right are "cw"; the eye of a ccw swirl
lies on the left of its walk.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from core.errors import InvariantViolation, SceneError
from core.exact_geom import Dir3, Point3, cross, det3, dot, is_parallel, sign
from core.scene_model import World
from core.sphere_map import (
    SOD,
    Arc,
    Arrangement,
    GreatSemicircle,
    PierceReport,
    VisMap,
    build_arrangement,
    compute_hosts,
    in_relint,
    on_arc,
    random_direction,
    semicircle_pierce_test,
    travel_tangent,
)
from core.storage import point_list

logger = logging.getLogger(__name__)

CCW = "ccw"
CW = "cw"
TURN = {CCW: 1, CW: -1}

State = Tuple[int, int]  # (arc id, endpoint travelled toward)


# --- axioms ----------------------------------------------------------------------


@dataclass
class AxiomReport:
    noncrossing: bool
    blocked: bool
    one_sided: bool
    witnesses: Dict[str, List[Dict]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.noncrossing and self.blocked and self.one_sided

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            **{
                name: {"pass": getattr(self, name), "witnesses": self.witnesses.get(name, [])}
                for name in ("noncrossing", "blocked", "one_sided")
            },
        }


def _interior_point(arc: Arc) -> Point3:
    return arc.u.vector + arc.v.vector


def relints_meet(a: Arc, b: Arc) -> bool:
    if is_parallel(a.normal, b.normal):
        return (
            any(in_relint(b, q) for q in (a.u, a.v))
            or any(in_relint(a, q) for q in (b.u, b.v))
            or in_relint(b, _interior_point(a))
            or in_relint(a, _interior_point(b))
        )
    w = cross(a.normal, b.normal)
    return any(in_relint(a, c) and in_relint(b, c) for c in (w, -w))


def feed_side(m: VisMap, arc_id: int, end: int, host_id: int) -> int:
    """Side of the host's circle from which the arc arrives (+1 left of u -> v)."""
    far = m.arc(arc_id).endpoint(1 - end)
    return sign(dot(m.arc(host_id).normal, far))


def check_axioms(m: VisMap) -> AxiomReport:
    arcs = m.arcs
    hosts = m.hosts or compute_hosts(arcs)
    crossing: List[Dict] = []
    unblocked: List[Dict] = []
    two_sided: List[Dict] = []
    for arc in arcs:
        if arc.u == arc.v or arc.u.is_antipodal(arc.v):
            crossing.append({"arc": arc.id, "reason": "endpoints equal or antipodal"})
        elif dot(arc.normal, arc.u) != 0 or dot(arc.normal, arc.v) != 0:
            crossing.append({"arc": arc.id, "reason": "endpoints off the arc's circle"})
    for i, a in enumerate(arcs):
        for b in arcs[i + 1:]:
            if relints_meet(a, b):
                crossing.append({"arcs": [a.id, b.id], "reason": "relative interiors intersect"})
            for ea in (0, 1):
                for eb in (0, 1):
                    if a.endpoint(ea) == b.endpoint(eb):
                        others = [h for h in hosts.get((a.id, ea), ()) if h != b.id]
                        if not others:
                            crossing.append({"arcs": [a.id, b.id], "reason": "shared endpoint inside no third arc"})
    for arc in arcs:
        for end in (0, 1):
            if not hosts.get((arc.id, end)):
                unblocked.append({"arc": arc.id, "end": end, "reason": "endpoint lies inside no arc"})
    sides: Dict[int, Dict[int, List[int]]] = {}
    for (arc_id, end), hosted_by in hosts.items():
        for host in hosted_by:
            side = feed_side(m, arc_id, end, host)
            sides.setdefault(host, {}).setdefault(side, []).append(arc_id)
    for host, by_side in sorted(sides.items()):
        if len(by_side) > 1 or 0 in by_side:
            two_sided.append({"arc": host, "feeders": {str(k): v for k, v in sorted(by_side.items())}})
    return AxiomReport(
        not crossing, not unblocked, not two_sided, {"noncrossing": crossing, "blocked": unblocked, "one_sided": two_sided}
    )


def require_sod(m: VisMap) -> SOD:
    if isinstance(m, SOD):
        return m
    report = check_axioms(m)
    if not report.passed:
        raise InvariantViolation("arc set is not a spherical occlusion diagram", report.to_dict())
    return SOD(m.viewpoint, m.arcs, m.hosts)


def arc_union_connected(s: VisMap) -> bool:
    if not s.arcs:
        return False
    graph = nx.Graph()
    graph.add_nodes_from(arc.id for arc in s.arcs)
    graph.add_edges_from(s.feeds_into)
    for i, a in enumerate(s.arcs):
        for b in s.arcs[i + 1:]:
            if {a.u, a.v} & {b.u, b.v}:
                graph.add_edge(a.id, b.id)
    return nx.is_connected(graph)


# --- swirls ----------------------------------------------------------------------


@dataclass(frozen=True)
class Swirl:
    arcs: Tuple[int, ...]
    ends: Tuple[int, ...]
    orientation: str
    eye: int

    @property
    def key(self) -> Tuple[str, Tuple[int, ...]]:
        return (self.orientation, self.arcs)

    def to_dict(self) -> Dict:
        return {"arcs": list(self.arcs), "orientation": self.orientation, "eye": self.eye}


def successor(s: VisMap, state: State, turn: int) -> State:
    arc_id, end = state
    arc = s.arc(arc_id)
    q = arc.endpoint(end)
    host_id = s.host(arc_id, end)
    if host_id is None:
        raise InvariantViolation(f"endpoint {end} of arc {arc_id} is not blocked", {"arc": arc_id, "end": end})
    host = s.arc(host_id)
    t_in = travel_tangent(arc, q, end)
    bend = sign(det3(q, t_in, cross(host.normal, q)))
    if bend == 0:
        raise InvariantViolation(f"arc {arc_id} meets arc {host_id} tangentially", {"arcs": [arc_id, host_id]})
    return (host_id, 1 if bend == turn else 0)


def _canonical(cycle: Sequence[State]) -> List[State]:
    start = min(range(len(cycle)), key=lambda i: cycle[i][0])
    return list(cycle[start:]) + list(cycle[:start])


def _eye(arr: Arrangement, state: State, orientation: str) -> int:
    h = arr.piece_ending_at(*state)
    if orientation == CW:
        h = (h[0], h[2], h[1])
    return arr.face_of[h]


def _make_swirl(cycle: Sequence[State], orientation: str, arr: Arrangement) -> Swirl:
    arcs = [st[0] for st in cycle]
    if len(set(arcs)) != len(arcs):
        raise InvariantViolation(
            "swirl walk revisits an arc before closing",
            {"orientation": orientation, "states": [list(st) for st in cycle]},
        )
    if len(arcs) < 3:
        raise InvariantViolation("two arcs feed into each other", {"arcs": arcs})
    ordered = _canonical(cycle)
    return Swirl(tuple(st[0] for st in ordered), tuple(st[1] for st in ordered), orientation, _eye(arr, ordered[0], orientation))


def _cycle_from(s: VisMap, start: State, turn: int) -> List[State]:
    index: Dict[State, int] = {}
    path: List[State] = []
    cur = start
    while cur not in index:
        index[cur] = len(path)
        path.append(cur)
        cur = successor(s, cur, turn)
    return path[index[cur]:]


def find_swirls(s: VisMap, arr: Optional[Arrangement] = None) -> List[Swirl]:
    arr = arr or build_arrangement(s)
    states = [(arc.id, end) for arc in sorted(s.arcs, key=lambda a: a.id) for end in (0, 1)]
    swirls: List[Swirl] = []
    for orientation in (CCW, CW):
        turn = TURN[orientation]
        nxt = {st: successor(s, st, turn) for st in states}
        done: set = set()
        for start in states:
            if start in done:
                continue
            index: Dict[State, int] = {}
            path: List[State] = []
            cur = start
            while cur not in index and cur not in done:
                index[cur] = len(path)
                path.append(cur)
                cur = nxt[cur]
            if cur in index:
                swirls.append(_make_swirl(path[index[cur]:], orientation, arr))
            done.update(path)
    swirls.sort(key=lambda sw: sw.key)
    logger.info(
        "found %d swirls (%d ccw, %d cw)",
        len(swirls),
        sum(1 for sw in swirls if sw.orientation == CCW),
        sum(1 for sw in swirls if sw.orientation == CW),
    )
    return swirls


@dataclass
class SwirlGraph:
    swirls: List[Swirl]
    graph: nx.Graph
    shared_arcs: List[Tuple[int, int, int]]

    def to_dict(self) -> Dict:
        return {
            "vertices": [{"index": i, **sw.to_dict()} for i, sw in enumerate(self.swirls)],
            "edges": [{"swirls": [i, j], "arc": arc} for i, j, arc in self.shared_arcs],
        }


def swirl_graph(s: VisMap, swirls: Optional[List[Swirl]] = None) -> SwirlGraph:
    swirls = swirls if swirls is not None else find_swirls(s)
    multi = nx.MultiGraph()
    for i, sw in enumerate(swirls):
        multi.add_node(i, orientation=sw.orientation)
    shared: List[Tuple[int, int, int]] = []
    for arc in s.arcs:
        members = [i for i, sw in enumerate(swirls) if arc.id in sw.arcs]
        if len(members) > 2:
            raise InvariantViolation(f"arc {arc.id} lies on {len(members)} swirls", {"arc": arc.id, "swirls": members})
        if len(members) == 2:
            i, j = members
            multi.add_edge(i, j, arc=arc.id)
            shared.append((i, j, arc.id))
    problems: List[str] = []
    if nx.number_of_selfloops(multi):
        problems.append("loop")
    for i, j in set(tuple(sorted(e[:2])) for e in multi.edges):
        if multi.number_of_edges(i, j) > 1:
            problems.append(f"parallel edges between swirls {i} and {j}")
    for i, j, _ in shared:
        if swirls[i].orientation == swirls[j].orientation:
            problems.append(f"swirls {i} and {j} share an arc but turn the same way")
    graph = nx.Graph(multi)
    if graph.number_of_nodes() and not nx.is_bipartite(graph):
        problems.append("not bipartite")
    if not any(sw.orientation == CW for sw in swirls) or not any(sw.orientation == CCW for sw in swirls):
        problems.append("a partite set is empty")
    nv, ne = multi.number_of_nodes(), multi.number_of_edges()
    if nv >= 3 and ne > 2 * nv - 4:
        problems.append(f"{ne} edges exceed the planar bipartite bound {2 * nv - 4}")
    if problems:
        raise InvariantViolation("swirl graph is malformed", {"problems": problems, "edges": [list(e) for e in shared]})
    return SwirlGraph(swirls, graph, shared)


@dataclass
class ContactGraph:
    graph: nx.DiGraph
    planar: bool

    def to_dict(self) -> Dict:
        return {"edges": [list(e) for e in sorted(self.graph.edges)], "planar": self.planar}


def contact_graph(s: VisMap) -> ContactGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(arc.id for arc in s.arcs)
    graph.add_edges_from(s.feeds_into)
    problems: List[str] = []
    for node in graph.nodes:
        if graph.out_degree(node) != 2:
            problems.append(f"arc {node} has out-degree {graph.out_degree(node)}")
    if nx.number_of_selfloops(graph):
        problems.append("self-loop")
    for a, b in graph.edges:
        if a < b and graph.has_edge(b, a):
            problems.append(f"arcs {a} and {b} feed into each other")
    if problems:
        raise InvariantViolation("contact graph is malformed", {"problems": problems})
    planar, _ = nx.check_planarity(graph.to_undirected())
    if planar and graph.number_of_nodes() < 6:
        raise InvariantViolation(
            "planar contact graph with out-degree two needs at least six arcs",
            {"arcs": graph.number_of_nodes()},
        )
    return ContactGraph(graph, planar)


# --- hemisphere walk ---------------------------------------------------------------


@dataclass(frozen=True)
class Hemisphere:
    pole: Dir3

    def contains(self, d) -> bool:
        return dot(self.pole, d) > 0

    def to_dict(self) -> Dict:
        return {"pole": self.pole.to_list()}


@dataclass(frozen=True)
class _Stretch:
    arc: int
    end: int
    start: Dir3
    stop: Dir3
    heading: Point3  # normal oriented with the direction of travel

    def holds(self, d) -> bool:
        n = self.heading
        return dot(n, d) == 0 and dot(cross(self.start, d), n) >= 0 and dot(cross(d, self.stop), n) >= 0


def _stretch(arc: Arc, end: int, start: Dir3) -> _Stretch:
    heading = arc.normal.vector if end else -arc.normal.vector
    return _Stretch(arc.id, end, start, arc.endpoint(end), heading)


def _common_points(a: _Stretch, b: _Stretch) -> List[Dir3]:
    if is_parallel(a.heading, b.heading):
        found = [d for d in (a.start, a.stop) if b.holds(d)] + [d for d in (b.start, b.stop) if a.holds(d)]
    else:
        w = cross(a.heading, b.heading)
        found = [Dir3.of(c) for c in (w, -w) if a.holds(c) and b.holds(c)]
    return list(dict.fromkeys(found))


def _gnomonic_area(points: Sequence[Dir3], pole: Dir3) -> int:
    axis = Point3(1, 0, 0) if not is_parallel(pole, Point3(1, 0, 0)) else Point3(0, 1, 0)
    e1 = cross(pole, axis)
    e2 = cross(pole, e1)
    # every loop point lies in the open hemisphere, so the heights are positive
    flat = [(Fraction(dot(d, e1), dot(d, pole)), Fraction(dot(d, e2), dot(d, pole))) for d in points]
    total = Fraction(0)
    for i, (x0, y0) in enumerate(flat):
        x1, y1 = flat[(i + 1) % len(flat)]
        total += x0 * y1 - x1 * y0
    return sign(total)


def _first_walk(s: VisMap, h: Hemisphere) -> Tuple[List[_Stretch], int, Dir3]:
    start_arc = next((arc for arc in sorted(s.arcs, key=lambda a: a.id) if h.contains(arc.u) or h.contains(arc.v)), None)
    if start_arc is None:
        raise InvariantViolation("no arc reaches into the hemisphere", {"pole": h.pole.to_list()})
    end = 1 if h.contains(start_arc.v) else 0
    other = start_arc.endpoint(1 - end)
    if h.contains(other):
        start = other
    else:
        c = cross(start_arc.normal, h.pole)
        start = next(Dir3.of(x) for x in (c, -c) if on_arc(start_arc, x))
    walk = [_stretch(start_arc, end, start)]
    limit = 2 * len(s.arcs) + 2
    while len(walk) <= limit:
        last = walk[-1]
        host_id = s.host(last.arc, last.end)
        if host_id is None:
            raise InvariantViolation("walk reached an unblocked endpoint", {"arc": last.arc, "end": last.end})
        host = s.arc(host_id)
        host_end = 1 if h.contains(host.v) else 0
        if not h.contains(host.endpoint(host_end)):
            raise InvariantViolation("blocking arc leaves the hemisphere at both ends", {"arc": host_id})
        step = _stretch(host, host_end, last.stop)
        best: Optional[Tuple[Dir3, int]] = None
        for j, earlier in enumerate(walk[:-1]):
            for point in _common_points(step, earlier):
                if best is None or _before(step, point, best[0]) or (point == best[0] and j > best[1]):
                    best = (point, j)
        if best is not None:
            point, j = best
            return walk + [step], j, point
        walk.append(step)
    raise InvariantViolation("hemisphere walk did not close", {"pole": h.pole.to_list()})


def _before(st: _Stretch, d1: Dir3, d2: Dir3) -> bool:
    return dot(cross(d1, d2), st.heading) > 0


def swirl_in_hemisphere(
    s: VisMap,
    h: Hemisphere,
    swirls: Optional[List[Swirl]] = None,
    arr: Optional[Arrangement] = None,
) -> Swirl:
    arr = arr or build_arrangement(s)
    swirls = swirls if swirls is not None else find_swirls(s, arr)
    walk, j, meet = _first_walk(s, h)
    loop = [meet] + [st.stop for st in walk[j:-1]]
    loop = [d for i, d in enumerate(loop) if d != loop[i - 1]] if len(loop) > 1 else loop
    turn = _gnomonic_area(loop, h.pole)
    if turn == 0:
        raise InvariantViolation("hemisphere walk enclosed no area", {"pole": h.pole.to_list()})
    orientation = CCW if turn > 0 else CW
    cycle = _cycle_from(s, (walk[j].arc, walk[j].end), turn)
    found = _make_swirl(cycle, orientation, arr)
    match = next((sw for sw in swirls if sw.key == found.key), found)
    face = arr.faces[match.eye]
    outside = [d.to_list() for d in face.vertices if not h.contains(d)]
    if outside:
        raise InvariantViolation(
            "eye of the walked swirl leaves the hemisphere",
            {"pole": h.pole.to_list(), "swirl": match.to_dict(), "outside": outside},
        )
    logger.debug("hemisphere %s holds swirl %s", h.pole.to_list(), match.arcs)
    return match


def eye_point(arr: Arrangement, sw: Swirl) -> Point3:
    total = Point3(0, 0, 0)
    for d in arr.faces[sw.eye].vertices:
        total = total + d.vector
    return total


def four_swirl_witness(s: VisMap, swirls: Optional[List[Swirl]] = None, arr: Optional[Arrangement] = None) -> List[Swirl]:
    """One swirl of each orientation plus the swirls found on both sides of a circle through their eyes."""
    arr = arr or build_arrangement(s)
    swirls = swirls if swirls is not None else find_swirls(s, arr)
    first = next((sw for sw in swirls if sw.orientation == CCW), None)
    second = next((sw for sw in swirls if sw.orientation == CW), None)
    if first is None or second is None:
        raise InvariantViolation("diagram lacks a swirl of each orientation", {"swirls": [sw.to_dict() for sw in swirls]})
    c1, c2 = eye_point(arr, first), eye_point(arr, second)
    pole = cross(c1, c2)
    if pole.is_zero():
        axis = Point3(1, 0, 0) if not is_parallel(c1, Point3(1, 0, 0)) else Point3(0, 1, 0)
        pole = cross(c1, axis)
    third = swirl_in_hemisphere(s, Hemisphere(Dir3.of(pole)), swirls, arr)
    fourth = swirl_in_hemisphere(s, Hemisphere(Dir3.of(-pole)), swirls, arr)
    witness = [first, second, third, fourth]
    if len({sw.key for sw in witness}) != 4:
        raise InvariantViolation("four-swirl witness repeats a swirl", {"swirls": [sw.to_dict() for sw in witness]})
    return witness


# --- semicircle covers ---------------------------------------------------------------


@dataclass
class SemicircleCover:
    members: List[GreatSemicircle]

    def __len__(self) -> int:
        return len(self.members)

    def to_dict(self) -> Dict:
        return {"size": len(self.members), "members": [sc.to_dict() for sc in self.members]}


def _covers(sc: GreatSemicircle, arc: Arc) -> bool:
    return is_parallel(sc.normal, arc.normal) and dot(arc.u, sc.selector) > 0 and dot(arc.v, sc.selector) > 0


def uncovered_arcs(s: VisMap, c: SemicircleCover) -> List[int]:
    return [arc.id for arc in s.arcs if not any(_covers(sc, arc) for sc in c.members)]


def check_cover(s: VisMap, c: SemicircleCover) -> bool:
    return not uncovered_arcs(s, c)


def induced_cover(world: World, p: Point3, s: VisMap) -> SemicircleCover:
    if s.viewpoint is None or not s.source_edges:
        raise SceneError("an induced cover needs a diagram built from a world")
    members: List[GreatSemicircle] = []
    for edge_id in s.source_edges:
        edge = world.edge_by_id[edge_id]
        a, b = edge.a, edge.b
        n = cross(a - p, b - p)
        selector = cross(n, b - a)
        if dot(selector, a - p) < 0:
            selector = -selector
        members.append(GreatSemicircle(Dir3.of(n), Dir3.of(selector), edge_id))
    cover = SemicircleCover(members)
    missing = uncovered_arcs(s, cover)
    if missing:
        raise InvariantViolation("induced semicircles miss some arcs", {"arcs": missing, "point": point_list(p)})
    return cover


def prune_unblocking_arcs(s: VisMap) -> SOD:
    """Drop arcs that block nothing until every arc blocks some arc."""
    arcs = list(s.arcs)
    while True:
        hosts = compute_hosts(arcs)
        blocking = {host for hosted in hosts.values() for host in hosted}
        kept = [arc for arc in arcs if arc.id in blocking]
        if len(kept) == len(arcs):
            break
        arcs = kept
    pruned = VisMap(s.viewpoint, arcs)
    report = check_axioms(pruned)
    if not report.passed:
        raise InvariantViolation("pruning produced an arc set that is not a diagram", report.to_dict())
    return SOD(pruned.viewpoint, pruned.arcs, pruned.hosts)


# --- full battery ----------------------------------------------------------------------


@dataclass
class SodAnalysis:
    arc_count: int
    face_count: int
    connected: bool
    swirls: List[Swirl]
    swirl_graph: SwirlGraph
    contact: ContactGraph
    pruned_arc_count: int
    witness: List[Swirl]
    cover: Optional[SemicircleCover] = None
    pierce: Optional[PierceReport] = None
    hemispheres: int = 0

    @property
    def ccw_count(self) -> int:
        return sum(1 for sw in self.swirls if sw.orientation == CCW)

    @property
    def cw_count(self) -> int:
        return sum(1 for sw in self.swirls if sw.orientation == CW)

    def checks(self) -> Dict[str, bool]:
        result = {
            "faces_equal_arcs_plus_two": self.face_count == self.arc_count + 2,
            "arc_union_connected": self.connected,
            "at_least_eight_arcs": self.arc_count >= 8,
            "at_least_four_swirls": len(self.swirls) >= 4,
            "both_orientations": self.cw_count >= 1 and self.ccw_count >= 1,
            "pruned_still_eight_arcs": self.pruned_arc_count >= 8,
        }
        if self.cover is not None:
            result["cover_at_least_eight"] = len(self.cover) >= 8
        if self.pierce is not None:
            result["semicircles_pierced"] = self.pierce.passed
        return result

    @property
    def failures(self) -> List[str]:
        return [name for name, ok in self.checks().items() if not ok]

    def to_dict(self) -> Dict:
        payload = {
            "arc_count": self.arc_count,
            "face_count": self.face_count,
            "swirls": [sw.to_dict() for sw in self.swirls],
            "ccw_count": self.ccw_count,
            "cw_count": self.cw_count,
            "swirl_graph": self.swirl_graph.to_dict(),
            "contact_graph": self.contact.to_dict(),
            "four_swirl_witness": [sw.to_dict() for sw in self.witness],
            "pruned_arc_count": self.pruned_arc_count,
            "hemispheres_walked": self.hemispheres,
            "checks": self.checks(),
        }
        if self.cover is not None:
            payload["cover"] = self.cover.to_dict()
        if self.pierce is not None:
            payload["semicircle_pierce"] = self.pierce.to_dict()
        return payload


def analyze(
    s: VisMap,
    world: Optional[World] = None,
    pierce_samples: int = 0,
    hemisphere_samples: int = 0,
    seed: int = 0,
) -> SodAnalysis:
    """Run every structural check on a diagram that already passed the axioms."""
    s = require_sod(s)
    arr = build_arrangement(s)
    swirls = find_swirls(s, arr)
    graph = swirl_graph(s, swirls)
    contact = contact_graph(s)
    witness = four_swirl_witness(s, swirls, arr)
    pruned = prune_unblocking_arcs(s)
    rng = random.Random(seed)
    for _ in range(hemisphere_samples):
        swirl_in_hemisphere(s, Hemisphere(Dir3.of(random_direction(rng, 20))), swirls, arr)
    cover = induced_cover(world, s.viewpoint, s) if world is not None and s.viewpoint is not None else None
    pierce = semicircle_pierce_test(s, pierce_samples, seed) if pierce_samples else None
    return SodAnalysis(
        arc_count=len(s.arcs),
        face_count=len(arr.faces),
        connected=arc_union_connected(s),
        swirls=swirls,
        swirl_graph=graph,
        contact=contact,
        pruned_arc_count=len(pruned.arcs),
        witness=witness,
        cover=cover,
        pierce=pierce,
        hemispheres=hemisphere_samples,
    )
