from __future__ import annotations

from pathlib import Path

import pytest

from core.exact_geom import ORIGIN
from core.scene_model import builtin
from core.sphere_map import build_arrangement, build_sod
from core.visibility_engine import visibility_report

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def eight_edge():
    return builtin("eight_edge_scene")


@pytest.fixture(scope="session")
def eight_edge_report(eight_edge):
    return visibility_report(eight_edge, ORIGIN)


@pytest.fixture(scope="session")
def eight_edge_sod(eight_edge, eight_edge_report):
    return build_sod(eight_edge, ORIGIN, eight_edge_report)


@pytest.fixture(scope="session")
def eight_edge_arrangement(eight_edge_sod):
    return build_arrangement(eight_edge_sod)


@pytest.fixture(scope="session")
def tetrahedron():
    return builtin("tetrahedron")


@pytest.fixture(scope="session")
def cube():
    return builtin("cube")
