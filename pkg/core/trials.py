from __future__ import annotations

import logging
import random
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from core.errors import BoundViolation, SceneError, SceneParseError
from core.exact_geom import ORIGIN, Point3, format_rat, parse_rat
from core.scene_model import Polygon, Scene, World, builtin, interiors_overlap, polygon_problems
from core.sod_analysis import analyze
from core.sphere_map import SodFailure, build_sod
from core.storage import load_json, point_list
from core.visibility_engine import EXTERIOR, INTERIOR, VisibilityReport, visibility_report, visible_vertices

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[Dict], None]

EIGHT_EDGE = "eight_edge_scene"
GRID = 64  # denominator of sampled coordinates


@dataclass
class TrialConfig:
    seed: int = 0
    trials: int = 100
    corpus: List[str] = field(default_factory=lambda: ["tetrahedron", "cube", "brush(2)"])
    scene_triangles: int = 5
    coordinate_bound: Fraction = Fraction(10)
    direction_bound: int = 20
    pierce_samples: int = 200
    hemisphere_samples: int = 20
    jitter_samples: int = 20
    jitter_radius: Fraction = Fraction(1, 2)
    targeted_points: bool = True
    max_retries: int = 200
    viewpoint_retries: int = 50

    def to_dict(self) -> Dict:
        payload = asdict(self)
        for key, value in payload.items():
            if isinstance(value, Fraction):
                payload[key] = format_rat(value)
        return payload


def load_config(path: Optional[Path] = None, **overrides) -> TrialConfig:
    """Defaults, then the JSON file (if readable), then explicit overrides."""
    raw: Dict = dict(load_json(Path(path), {})) if path else {}
    if not isinstance(raw, dict):
        raise SceneParseError("configuration must be a JSON object")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = TrialConfig()
    known = {f.name: f for f in fields(TrialConfig)}
    for key, value in raw.items():
        if key not in known:
            raise SceneParseError(f"unknown setting {key!r}", field=key)
        default = getattr(cfg, key)
        try:
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ValueError(f"expected true or false, got {value!r}")
                setattr(cfg, key, value)
            elif isinstance(default, Fraction):
                setattr(cfg, key, parse_rat(value))
            elif isinstance(default, int):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ValueError(f"expected an integer, got {value!r}")
                setattr(cfg, key, value)
            else:
                if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                    raise ValueError("expected a list of builtin names")
                setattr(cfg, key, list(value))
        except ValueError as exc:
            raise SceneParseError(str(exc), field=key) from exc
    return cfg


def _coordinate(rng: random.Random, bound: Fraction) -> Fraction:
    limit = int(bound * GRID)
    return Fraction(rng.randint(-limit, limit), GRID)


def random_scene(cfg: TrialConfig, rng: Optional[random.Random] = None) -> Scene:
    """Rejection-sampled triangles with pairwise disjoint relative interiors."""
    if cfg.scene_triangles <= 0:
        raise SceneError("a scene needs at least one polygon")
    rng = rng or random.Random(cfg.seed)
    triangles: List[Polygon] = []
    for index in range(cfg.scene_triangles):
        for _ in range(cfg.max_retries):
            corners = tuple(
                Point3(*(_coordinate(rng, cfg.coordinate_bound) for _ in range(3))) for _ in range(3)
            )
            candidate = Polygon(f"S{index}", corners)
            if polygon_problems(candidate):
                continue
            if any(interiors_overlap(candidate, other) for other in triangles):
                continue
            triangles.append(candidate)
            break
        else:
            raise SceneError(f"could not place triangle {index} after {cfg.max_retries} attempts")
    return Scene(triangles)


def sample_viewpoint(world: World, rng: random.Random) -> Point3:
    """A point of the world's bounding box inflated by a factor of two."""
    lo, hi = world.bounding_box()
    coords = []
    for a, b in ((lo.x, hi.x), (lo.y, hi.y), (lo.z, hi.z)):
        width = max(b - a, Fraction(1))
        u = Fraction(rng.randint(0, 2 * GRID), 2 * GRID)
        coords.append(a - width / 2 + 2 * width * u)
    return Point3(*coords)


def targeted_viewpoints(world: World) -> Iterator[Point3]:
    """Points just off facet centroids and edge midpoints, on both sides."""
    for poly in world.polygons:
        n = poly.plane.normal
        scale = Fraction(1, 32 * (abs(n.x) + abs(n.y) + abs(n.z)))
        c = Point3(0, 0, 0)
        for v in poly.vertices:
            c = c + v
        c = c.scale(Fraction(1, len(poly.vertices)))
        yield c + n.vector.scale(scale)
        yield c - n.vector.scale(scale)
    for edge in world.edges:
        mid = edge.point(Fraction(1, 2))
        normals = Point3(0, 0, 0)
        for pid in edge.polygons:
            normals = normals + world.by_id[pid].plane.normal.vector
        if normals.is_zero():
            continue
        scale = Fraction(1, 32 * (abs(normals.x) + abs(normals.y) + abs(normals.z)))
        yield mid + normals.scale(scale)
        yield mid - normals.scale(scale)


@dataclass
class TheoremStat:
    name: str
    bound: int
    trials: int = 0
    min_value: Optional[int] = None
    max_value: Optional[int] = None
    min_world: Optional[str] = None
    min_point: Optional[Point3] = None

    def record(self, value: int, world_name: str, p: Point3) -> None:
        self.trials += 1
        if self.min_value is None or value < self.min_value:
            self.min_value = value
            self.min_world = world_name
            self.min_point = p
        if self.max_value is None or value > self.max_value:
            self.max_value = value

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "bound": self.bound,
            "trials": self.trials,
            "min": self.min_value,
            "max": self.max_value,
            "min_witness": None
            if self.min_point is None
            else {"world": self.min_world, "point": point_list(self.min_point)},
        }


THEOREMS: List[Tuple[str, int]] = [
    ("weak_edges", 6),
    ("positive_interior_or_boundary", 6),
    ("positive_exterior", 3),
    ("segments", 6),
    ("split_edge_positive", 6),
    ("cube_interior_weak", 12),
    ("cube_exterior_weak", 8),
    ("vertex_free_positive", 8),
]


@dataclass
class SuiteReport:
    config: Dict
    theorems: Dict[str, TheoremStat]
    worlds: List[Dict] = field(default_factory=list)
    sod_runs: List[Dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(stat.min_value is None or stat.min_value >= stat.bound for stat in self.theorems.values())

    def to_dict(self) -> Dict:
        return {
            "config": self.config,
            "passed": self.passed,
            "theorems": [stat.to_dict() for stat in self.theorems.values()],
            "worlds": self.worlds,
            "sod_runs": self.sod_runs,
        }


class TheoremSuite:
    def __init__(
        self,
        cfg: TrialConfig,
        progress_callback: Optional[ProgressCallback] = None,
        progress_interval_sec: float = 0.5,
    ):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.progress_callback = progress_callback
        self.progress_interval_sec = progress_interval_sec
        self._last_progress_emit = 0.0
        self._viewpoints_done = 0
        self.report = SuiteReport(cfg.to_dict(), {name: TheoremStat(name, bound) for name, bound in THEOREMS})

    def run(self) -> SuiteReport:
        started = time.time()
        self._emit_progress("starting", "", force=True)
        for name in self.cfg.corpus:
            self._run_world(name, builtin(name))
        self._run_eight_edge()
        self._run_random_scenes()
        self._emit_progress("completed", "", force=True)
        logger.info(
            "theorem suite: %d viewpoints, %d SODs in %.1fs",
            self._viewpoints_done,
            len(self.report.sod_runs),
            time.time() - started,
        )
        return self.report

    # -- stages ----------------------------------------------------------------

    def _run_world(self, name: str, world: World) -> None:
        points = [sample_viewpoint(world, self.rng) for _ in range(self.cfg.trials)]
        if self.cfg.targeted_points and world.is_polyhedron:
            points.extend(targeted_viewpoints(world))
        self._emit_progress("world", name, force=True)
        for p in points:
            self._check_viewpoint(name, world, p)
        self.report.worlds.append({"world": name, "kind": world.semantics, "viewpoints": len(points)})

    def _run_eight_edge(self) -> None:
        world = builtin(EIGHT_EDGE)
        self._emit_progress("world", EIGHT_EDGE, force=True)
        points = [ORIGIN]
        radius = self.cfg.jitter_radius
        for _ in range(self.cfg.jitter_samples):
            points.append(Point3(*(_coordinate(self.rng, radius) for _ in range(3))))
        for p in points:
            self._check_viewpoint(EIGHT_EDGE, world, p)
        self.report.worlds.append({"world": EIGHT_EDGE, "kind": world.semantics, "viewpoints": len(points)})

    def _run_random_scenes(self) -> None:
        viewpoints = 0
        vertex_free = 0
        for i in range(self.cfg.trials):
            name = f"random_scene[{i}]"
            world = random_scene(self.cfg, self.rng)
            self._check_viewpoint(name, world, sample_viewpoint(world, self.rng))
            viewpoints += 1
            p = self.vertex_free_viewpoint(world)
            if p is None:
                logger.debug("%s: no vertex-free viewpoint in %d samples", name, self.cfg.viewpoint_retries)
                continue
            self._check_viewpoint(name, world, p)
            viewpoints += 1
            vertex_free += 1
        logger.info("random scenes: %d of %d had a vertex-free viewpoint", vertex_free, self.cfg.trials)
        self.report.worlds.append(
            {"world": "random_scene", "kind": "scene", "viewpoints": viewpoints, "vertex_free": vertex_free}
        )

    def vertex_free_viewpoint(self, world: World) -> Optional[Point3]:
        """Sampled viewpoint that sees no vertex, or None after viewpoint_retries tries."""
        for _ in range(self.cfg.viewpoint_retries):
            p = sample_viewpoint(world, self.rng)
            if not visible_vertices(world, p):
                return p
        return None

    # -- checks ----------------------------------------------------------------

    def _bound(self, theorem: str, value: int, world_name: str, world: World, p: Point3, vis: VisibilityReport) -> None:
        stat = self.report.theorems[theorem]
        stat.record(value, world_name, p)
        if value < stat.bound:
            raise BoundViolation(
                f"{theorem}: observed {value} < {stat.bound} at {point_list(p)} in {world_name}",
                {
                    "theorem": theorem,
                    "bound": stat.bound,
                    "observed": value,
                    "world": world_name,
                    "scene": world.to_dict(),
                    "point": point_list(p),
                    "visibility": vis.to_dict(),
                },
            )

    def _check_viewpoint(self, world_name: str, world: World, p: Point3) -> None:
        vis = visibility_report(world, p)
        self._viewpoints_done += 1
        self._emit_progress("viewpoint", world_name)
        if world.is_polyhedron:
            kind = vis.point_class.kind
            self._bound("weak_edges", vis.weak_count, world_name, world, p, vis)
            self._bound("segments", vis.segment_count, world_name, world, p, vis)
            if kind == EXTERIOR:
                self._bound("positive_exterior", vis.positive_count, world_name, world, p, vis)
            else:
                self._bound("positive_interior_or_boundary", vis.positive_count, world_name, world, p, vis)
            if vis.split_edges:
                self._bound("split_edge_positive", vis.positive_count, world_name, world, p, vis)
            if world_name.startswith("cube"):
                if kind == INTERIOR:
                    self._bound("cube_interior_weak", vis.weak_count, world_name, world, p, vis)
                elif kind == EXTERIOR:
                    self._bound("cube_exterior_weak", vis.weak_count, world_name, world, p, vis)
        if not vis.visible_vertices:
            self._bound("vertex_free_positive", vis.positive_count, world_name, world, p, vis)
            self._sod_battery(world_name, world, p, vis)

    def _sod_battery(self, world_name: str, world: World, p: Point3, vis: VisibilityReport) -> None:
        sod = build_sod(world, p, vis)
        if isinstance(sod, SodFailure):
            return
        run = len(self.report.sod_runs)
        analysis = analyze(
            sod,
            world=world,
            pierce_samples=self.cfg.pierce_samples,
            hemisphere_samples=self.cfg.hemisphere_samples,
            seed=self.cfg.seed + run,
        )
        if analysis.failures:
            raise BoundViolation(
                f"SOD checks failed at {point_list(p)} in {world_name}: {', '.join(analysis.failures)}",
                {"world": world_name, "scene": world.to_dict(), "point": point_list(p), "analysis": analysis.to_dict()},
            )
        self.report.sod_runs.append(
            {
                "world": world_name,
                "point": point_list(p),
                "arcs": analysis.arc_count,
                "faces": analysis.face_count,
                "swirls": {"ccw": analysis.ccw_count, "cw": analysis.cw_count},
                "cover": len(analysis.cover) if analysis.cover is not None else None,
            }
        )

    def _emit_progress(self, stage: str, current: str, force: bool = False) -> None:
        if not self.progress_callback:
            return

        now = time.time()
        if not force and (now - self._last_progress_emit) < self.progress_interval_sec:
            return

        payload = {
            "stage": stage,
            "current": current,
            "viewpoints": self._viewpoints_done,
            "sod_runs": len(self.report.sod_runs),
            "timestamp": now,
        }
        self._last_progress_emit = now
        try:
            self.progress_callback(payload)
        except Exception:
            logger.debug("progress callback failed", exc_info=True)


def theorem_suite(cfg: TrialConfig, progress_callback: Optional[ProgressCallback] = None) -> SuiteReport:
    return TheoremSuite(cfg, progress_callback).run()
