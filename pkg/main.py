from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from core.eight_edge_check import verify_section6
from core.errors import GeometryError, InvariantViolation, SceneError
from core.exact_geom import parse_rat
from core.oracle import DEFAULT_DIRECTION_BOUND, ray_oracle
from core.report import (
    analysis_payload,
    axioms_payload,
    cover_payload,
    export_report,
    sod_failure_payload,
    sod_payload,
    validation_payload,
    violation_payload,
    visibility_payload,
)
from core.scene_model import Polyhedron, Scene, World, load_world, manifold_problems, validate_world
from core.sod_analysis import analyze, check_axioms, induced_cover, require_sod
from core.sphere_map import SodFailure, build_sod, load_vismap, vismap_to_dict
from core.storage import dumps, parse_point_arg
from core.trials import load_config, theorem_suite
from core.visibility_engine import visibility_report

logger = logging.getLogger("sodlab")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, parse_rat(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _point(text: str):
    try:
        return parse_point_arg(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_world_options(parser: argparse.ArgumentParser, point: bool = True) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--scene", help="scene JSON file")
    source.add_argument("--builtin", help="builtin world, e.g. cube or brush(2)")
    parser.add_argument("--param", type=_param, action="append", default=[], help="builtin parameter key=value")
    parser.add_argument("--semantics", choices=["scene", "polyhedron"], help="override the world's semantics")
    if point:
        parser.add_argument("--point", type=_point, required=True, help="viewpoint x,y,z (rationals allowed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sodlab", description="Exact visibility and spherical occlusion diagrams")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for details")
    sub = parser.add_subparsers(dest="command", required=True)

    scene = sub.add_parser("scene", help="scene files and builtins").add_subparsers(dest="action", required=True)
    validate = scene.add_parser("validate", help="check a scene or polyhedron")
    validate.add_argument("file", nargs="?", help="scene JSON file")
    validate.add_argument("--builtin")
    validate.add_argument("--param", type=_param, action="append", default=[])
    emit = scene.add_parser("emit", help="print a builtin as a scene document")
    emit.add_argument("--builtin", required=True)
    emit.add_argument("--param", type=_param, action="append", default=[])
    emit.add_argument("--out", type=Path)

    vis = sub.add_parser("vis", help="visibility from a point").add_subparsers(dest="action", required=True)
    _add_world_options(vis.add_parser("stats", help="visible sets and edge counts"))

    sod = sub.add_parser("sod", help="spherical occlusion diagrams").add_subparsers(dest="action", required=True)
    build = sod.add_parser("build", help="visibility map of a vertex-free viewpoint")
    _add_world_options(build)
    build.add_argument("--out", type=Path, help="write the SOD document for sod check and sod swirls")
    check = sod.add_parser("check", help="axioms of a SOD file")
    check.add_argument("--sod", type=Path, required=True)
    swirls = sod.add_parser("swirls", help="swirls, graphs and the structural battery")
    swirls.add_argument("--sod", type=Path, required=True)
    swirls.add_argument("--samples", type=int, default=0, help="random semicircles and hemispheres to test")
    swirls.add_argument("--seed", type=int, default=0)
    cover = sod.add_parser("cover", help="semicircle cover induced by the visible edges")
    _add_world_options(cover)

    suite = sub.add_parser("suite", help="theorem suites").add_subparsers(dest="action", required=True)
    theorems = suite.add_parser("theorems", help="randomized bound checks")
    theorems.add_argument("--seed", type=int)
    theorems.add_argument("--trials", type=int)
    theorems.add_argument("--config", type=Path)
    theorems.add_argument("--out", type=Path)
    suite.add_parser("section6", aliases=["eight-edge"], help="exact check of the eight-edge scene")

    oracle = sub.add_parser("oracle", help="ray-sampling cross-check")
    _add_world_options(oracle)
    oracle.add_argument("--dirs", type=int, default=1000)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--bound", type=int, default=DEFAULT_DIRECTION_BOUND)
    oracle.add_argument("--hits", action="store_true", help="include every ray's first hit")
    return parser


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _log_progress(progress: Dict) -> None:
    details = {k: v for k, v in progress.items() if k not in ("stage", "timestamp")}
    logger.info("%s %s", progress.get("stage"), details)


def _world(args) -> World:
    world = load_world(getattr(args, "scene", None), args.builtin, dict(args.param))
    semantics = getattr(args, "semantics", None)
    if semantics == "scene" and world.is_polyhedron:
        return Scene(world.polygons)
    if semantics == "polyhedron" and not world.is_polyhedron:
        solid = Polyhedron(world.polygons)
        problems = manifold_problems(solid)
        if not problems.ok:
            raise SceneError(f"not a closed surface: {problems.problems[0]['detail']}")
        return solid
    return world


def _emit(payload: Dict, out: Optional[Path] = None) -> None:
    if out is not None:
        export_report(payload, out)
    print(dumps(payload))


def _run(args) -> int:
    command = f"{args.command} {getattr(args, 'action', '')}".strip()
    if command == "scene validate":
        if not args.file and not args.builtin:
            raise SceneError("scene validate needs a file or --builtin")
        world = load_world(args.file, args.builtin, dict(args.param))
        report = validate_world(world)
        _emit(validation_payload(world, report))
        return EXIT_OK if report.ok else EXIT_FAILED
    if command == "scene emit":
        world = load_world(None, args.builtin, dict(args.param))
        _emit(world.to_dict(), args.out)
        return EXIT_OK
    if command == "vis stats":
        world = _world(args)
        _emit(visibility_payload(world, visibility_report(world, args.point)))
        return EXIT_OK
    if command == "sod build":
        built = build_sod(_world(args), args.point)
        if isinstance(built, SodFailure):
            _emit(sod_failure_payload(built))
            return EXIT_FAILED
        if args.out is not None:
            export_report(vismap_to_dict(built), args.out)
        _emit(sod_payload(built))
        return EXIT_OK
    if command == "sod check":
        vismap = load_vismap(args.sod)
        report = check_axioms(vismap)
        _emit(axioms_payload(vismap, report))
        return EXIT_OK if report.passed else EXIT_FAILED
    if command == "sod swirls":
        vismap = load_vismap(args.sod)
        report = check_axioms(vismap)
        if not report.passed:
            _emit(axioms_payload(vismap, report))
            return EXIT_FAILED
        analysis = analyze(
            require_sod(vismap),
            pierce_samples=args.samples,
            hemisphere_samples=args.samples,
            seed=args.seed,
        )
        _emit(analysis_payload(analysis))
        return EXIT_OK if not analysis.failures else EXIT_FAILED
    if command == "sod cover":
        world = _world(args)
        built = build_sod(world, args.point)
        if isinstance(built, SodFailure):
            _emit(sod_failure_payload(built))
            return EXIT_FAILED
        payload = cover_payload(built, induced_cover(world, args.point, built))
        _emit(payload)
        return EXIT_OK if payload["at_least_eight"] else EXIT_FAILED
    if command == "suite theorems":
        cfg = load_config(args.config, seed=args.seed, trials=args.trials)
        result = theorem_suite(cfg, progress_callback=_log_progress)
        _emit(result.to_dict(), args.out)
        return EXIT_OK
    if command in ("suite section6", "suite eight-edge"):
        report = verify_section6()
        _emit(report.to_dict())
        return EXIT_OK if report.passed else EXIT_FAILED
    if command == "oracle":
        report = ray_oracle(_world(args), args.point, args.dirs, args.seed, args.bound, progress_callback=_log_progress)
        _emit(report.to_dict(with_hits=args.hits))
        return EXIT_OK if report.passed else EXIT_FAILED
    raise SceneError(f"unknown command: {command}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    _configure_logging(args.verbose)
    try:
        return _run(args)
    except InvariantViolation as exc:
        logger.error("%s", exc)
        print(dumps(violation_payload(exc, f"{args.command} {getattr(args, 'action', '')}".strip())))
        return EXIT_FAILED
    except (SceneError, GeometryError) as exc:
        print(f"sodlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
