from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List

from core.errors import SceneParseError
from core.exact_geom import Point3, format_rat, parse_rat


def load_json(path: Path, default: Dict) -> Dict:
    if not path.exists():
        return default
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return default


def read_document(path: Path) -> Dict:
    """Strict variant of load_json: a broken file is an error, with its line."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc


def dumps(payload: Dict) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2)


def write_json(path: Path, payload: Dict) -> None:
    path.write_text(dumps(payload), encoding="utf-8")


def parse_point(values, field: str) -> Point3:
    if not isinstance(values, (list, tuple)) or len(values) != 3:
        raise SceneParseError("expected a list of three rationals", field=field)
    coords = []
    for i, value in enumerate(values):
        try:
            coords.append(parse_rat(value))
        except ValueError as exc:
            raise SceneParseError(str(exc), field=f"{field}[{i}]") from exc
    return Point3(*coords)


def point_list(p) -> List[str]:
    return [format_rat(p.x), format_rat(p.y), format_rat(p.z)]


def parse_point_arg(text: str) -> Point3:
    """Command-line form ``x,y,z`` with each coordinate an integer or ``num/den``."""
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"expected x,y,z, got {text!r}")
    return Point3(*(parse_rat(part) for part in parts))
