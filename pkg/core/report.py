from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional

from core.errors import InvariantViolation
from core.scene_model import ValidationReport, World
from core.sod_analysis import AxiomReport, SemicircleCover, SodAnalysis, uncovered_arcs
from core.sphere_map import SOD, SodFailure, VisMap, vismap_to_dict
from core.storage import point_list, write_json
from core.visibility_engine import VisibilityReport


def world_summary(world: World) -> Dict:
    return {
        "semantics": world.semantics,
        "polygons": len(world.polygons),
        "edges": len(world.edges),
        "vertices": len(world.vertex_ids),
    }


def validation_payload(world: World, report: ValidationReport) -> Dict:
    return {"world": world_summary(world), **report.to_dict()}


def visibility_payload(world: World, vis: VisibilityReport) -> Dict:
    return {"world": world_summary(world), **vis.to_dict()}


def sod_payload(sod: SOD) -> Dict:
    return {"status": "ok", "arc_count": len(sod.arcs), "sod": vismap_to_dict(sod)}


def sod_failure_payload(failure: SodFailure) -> Dict:
    return failure.to_dict()


def axioms_payload(m: VisMap, report: AxiomReport) -> Dict:
    return {"arc_count": len(m.arcs), "axioms": report.to_dict()}


def analysis_payload(analysis: SodAnalysis) -> Dict:
    payload = analysis.to_dict()
    payload["passed"] = not analysis.failures
    payload["failures"] = analysis.failures
    return payload


def cover_payload(sod: SOD, cover: SemicircleCover) -> Dict:
    missing = uncovered_arcs(sod, cover)
    return {
        "point": point_list(sod.viewpoint) if sod.viewpoint is not None else None,
        "arc_count": len(sod.arcs),
        "cover": cover.to_dict(),
        "covers_all_arcs": not missing,
        "uncovered_arcs": missing,
        "at_least_eight": len(cover) >= 8,
    }


def violation_payload(exc: InvariantViolation, command: Optional[str] = None) -> Dict:
    payload = {"status": "failure", **exc.to_dict()}
    if command:
        payload["command"] = command
    return payload


def export_report(payload: Dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    write_json(path, payload)
