"""Ray-sampling cross-check of the visibility engine.

The oracle shoots exact rational rays from the viewpoint and finds their first
hit by brute force, then compares what it sees with the engine's answers. It
shares only the kernel predicates with the engine.
"""
from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from core.errors import GeometryError
from core.exact_geom import OUTSIDE, Dir3, Point3, cross, det3, dot, is_parallel, lerp, point_in_polygon_2d, segment_meet_params
from core.scene_model import Polygon, World
from core.sphere_map import random_direction
from core.storage import point_list
from core.visibility_engine import VisibilityReport, sees_point, visibility_report

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[Dict], None]

DEFAULT_DIRECTION_BOUND = 20
EDGE_SAMPLES_PER_DIRECTION = 1
MAX_RESAMPLES = 1000


@dataclass
class RayHit:
    direction: Dir3
    polygon: Optional[str]
    s: Optional[Fraction]

    def to_dict(self) -> Dict:
        return {
            "direction": self.direction.to_list(),
            "polygon": self.polygon,
            "s": None if self.s is None else str(self.s),
        }


@dataclass
class OracleReport:
    point: Point3
    samples: int
    hits: List[RayHit] = field(default_factory=list)
    disagreements: List[Dict] = field(default_factory=list)
    resampled: int = 0
    midpoints_checked: int = 0
    edge_points_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.disagreements

    def to_dict(self, with_hits: bool = False) -> Dict:
        payload = {
            "point": point_list(self.point),
            "samples": self.samples,
            "resampled": self.resampled,
            "midpoints_checked": self.midpoints_checked,
            "edge_points_checked": self.edge_points_checked,
            "no_hit": sum(1 for hit in self.hits if hit.polygon is None),
            "passed": self.passed,
            "disagreements": self.disagreements,
        }
        if with_hits:
            payload["hits"] = [hit.to_dict() for hit in self.hits]
        return payload


def _ray_meets_segment(p: Point3, d: Point3, a: Point3, b: Point3) -> bool:
    u, v = a - p, b - p
    if u.is_zero() or v.is_zero():
        w = v if u.is_zero() else u
        return is_parallel(d, w) and dot(d, w) > 0
    if det3(u, v, d) != 0:
        return False
    w = cross(u, v)
    if w.is_zero():
        return any(is_parallel(d, x) and dot(d, x) > 0 for x in (u, v))
    return dot(cross(u, d), w) >= 0 and dot(cross(d, v), w) >= 0


def degenerate_direction(world: World, p: Point3, d: Point3) -> bool:
    """True when the ray touches a boundary segment or runs inside a polygon's plane."""
    for a, b in world.segments:
        if _ray_meets_segment(p, d, a, b):
            return True
    for poly in world.polygons:
        if dot(poly.plane.normal, d) == 0 and poly.plane.contains(p):
            return True
    return False


def _plane_param(poly: Polygon, p: Point3, d: Point3) -> Optional[Fraction]:
    nd = dot(poly.plane.normal, d)
    if nd == 0:
        return None
    return Fraction(poly.plane.offset - dot(poly.plane.normal, p)) / nd


def ray_hits(world: World, p: Point3, d: Point3) -> List[Tuple[Fraction, str]]:
    """Every (s, polygon id) with p + s*d in the closed polygon and s > 0, nearest first."""
    found = []
    for poly in world.polygons:
        s = _plane_param(poly, p, d)
        if s is None or s <= 0:
            continue
        if point_in_polygon_2d(poly, p + d.scale(s)) != OUTSIDE:
            found.append((s, poly.id))
    return sorted(found)


def occluded(world: World, p: Point3, x: Point3) -> bool:
    """Brute-force test of whether the open segment px is blocked."""
    r = x - p
    for poly in world.polygons:
        s = _plane_param(poly, p, r)
        if s is None or not 0 < s < 1:
            continue
        if point_in_polygon_2d(poly, lerp(p, x, s)) != OUTSIDE:
            return True
    if world.is_polyhedron:
        for edge in world.edges:
            ts = segment_meet_params(p, x, edge.a, edge.b)
            if len(ts) == 2 or any(0 < t < 1 for t in ts):
                return True
    return False


class RayOracle:
    def __init__(
        self,
        world: World,
        p: Point3,
        seed: int = 0,
        bound: int = DEFAULT_DIRECTION_BOUND,
        progress_callback: Optional[ProgressCallback] = None,
        progress_interval_sec: float = 0.5,
    ):
        self.world = world
        self.p = p
        self.rng = random.Random(seed)
        self.bound = bound
        self.progress_callback = progress_callback
        self.progress_interval_sec = progress_interval_sec
        self._last_progress_emit = 0.0

    def run(self, n_dirs: int, report: Optional[VisibilityReport] = None) -> OracleReport:
        out = OracleReport(self.p, n_dirs)
        if n_dirs <= 0:
            return out
        report = report or visibility_report(self.world, self.p)
        self._check_midpoints(report, out)
        edges = self.world.edges
        for i in range(n_dirs):
            d = self._direction(out)
            self._check_ray(d, out)
            for _ in range(EDGE_SAMPLES_PER_DIRECTION if edges else 0):
                edge = edges[self.rng.randrange(len(edges))]
                t = Fraction(self.rng.randint(0, 4 * self.bound), 4 * self.bound)
                self._check_edge_point(report, edge, t, out)
            self._emit_progress("sampling", i + 1, n_dirs, len(out.disagreements))
        self._emit_progress("completed", n_dirs, n_dirs, len(out.disagreements), force=True)
        logger.info(
            "oracle at %s: %d directions, %d resampled, %d disagreements",
            point_list(self.p),
            n_dirs,
            out.resampled,
            len(out.disagreements),
        )
        return out

    def _direction(self, out: OracleReport) -> Point3:
        for _ in range(MAX_RESAMPLES):
            d = random_direction(self.rng, self.bound)
            if not degenerate_direction(self.world, self.p, d):
                return d
            out.resampled += 1
            logger.debug("resampling degenerate direction %s", point_list(d))
        raise GeometryError(f"no admissible ray direction from {point_list(self.p)}")

    def _disagree(self, out: OracleReport, check: str, engine: bool, oracle: bool, **where) -> None:
        record = {"check": check, "engine": engine, "oracle": oracle, **where}
        logger.warning("oracle disagreement: %s", record)
        out.disagreements.append(record)

    def _check_ray(self, d: Point3, out: OracleReport) -> None:
        hits = ray_hits(self.world, self.p, d)
        direction = Dir3.of(d)
        if not hits:
            out.hits.append(RayHit(direction, None, None))
            if not sees_point(self.world, self.p, self.p + d):
                self._disagree(out, "open_ray_visible", False, True, direction=direction.to_list())
            return
        s, pid = hits[0]
        out.hits.append(RayHit(direction, pid, s))
        y = self.p + d.scale(s)
        if not sees_point(self.world, self.p, y):
            self._disagree(out, "first_hit_visible", False, True, direction=direction.to_list(), polygon=pid)
        later = [t for t, _ in hits if t > s]
        beyond = (s + later[0]) / 2 if later else 2 * s
        if sees_point(self.world, self.p, self.p + d.scale(beyond)):
            self._disagree(out, "beyond_hit_hidden", True, False, direction=direction.to_list(), polygon=pid)

    def _check_midpoints(self, report: VisibilityReport, out: OracleReport) -> None:
        for vs in report.visible_sets:
            edge = self.world.edge_by_id[vs.edge]
            for iv in vs.positive:
                x = edge.point((iv.lo + iv.hi) / 2)
                out.midpoints_checked += 1
                if x != self.p and occluded(self.world, self.p, x):
                    self._disagree(out, "interval_midpoint", True, False, edge=vs.edge, t=str((iv.lo + iv.hi) / 2))

    def _check_edge_point(self, report: VisibilityReport, edge, t: Fraction, out: OracleReport) -> None:
        x = edge.point(t)
        if x == self.p:
            return
        out.edge_points_checked += 1
        engine = report.visible_set(edge.id).contains(t)
        oracle = not occluded(self.world, self.p, x)
        if engine != oracle:
            self._disagree(out, "edge_point", engine, oracle, edge=edge.id, t=str(t))

    def _emit_progress(self, stage: str, current: int, total: int, disagreements: int, force: bool = False) -> None:
        if not self.progress_callback:
            return

        now = time.time()
        if not force and (now - self._last_progress_emit) < self.progress_interval_sec:
            return

        payload = {
            "stage": stage,
            "current": current,
            "total": total,
            "disagreements": disagreements,
            "timestamp": now,
        }
        self._last_progress_emit = now
        try:
            self.progress_callback(payload)
        except Exception:
            logger.debug("progress callback failed", exc_info=True)


def ray_oracle(
    world: World,
    p: Point3,
    n_dirs: int,
    seed: int = 0,
    bound: int = DEFAULT_DIRECTION_BOUND,
    progress_callback: Optional[ProgressCallback] = None,
) -> OracleReport:
    return RayOracle(world, p, seed, bound, progress_callback).run(n_dirs)
