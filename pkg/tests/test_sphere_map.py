import random

import pytest

from core.errors import GeometryError, SceneParseError
from core.exact_geom import ORIGIN, Dir3, Point3
from core.sphere_map import (
    SOD,
    GreatSemicircle,
    SodFailure,
    VisMap,
    build_arrangement,
    build_sod,
    build_vismap,
    enumerate_faces,
    in_relint,
    load_vismap,
    make_arc,
    on_arc,
    order_along,
    project,
    random_semicircle,
    semicircle_meets_arc,
    semicircle_pierce_test,
    travel_tangent,
    vismap_from_dict,
    vismap_to_dict,
)
from core.storage import write_json

X, Y, Z = Dir3(1, 0, 0), Dir3(0, 1, 0), Dir3(0, 0, 1)


def test_quarter_arc_membership():
    arc = make_arc(0, X, Y)
    assert arc.normal == Z
    assert on_arc(arc, Dir3(1, 1, 0))
    assert in_relint(arc, Dir3(1, 1, 0))
    assert on_arc(arc, X) and not in_relint(arc, X)
    assert not on_arc(arc, Dir3(-1, 0, 0))
    assert not on_arc(arc, Dir3(1, 0, 1))


def test_arc_needs_distinct_non_antipodal_ends():
    with pytest.raises(GeometryError):
        make_arc(0, X, -X)
    with pytest.raises(GeometryError):
        make_arc(0, X, X)


def test_travel_tangent_points_toward_the_chosen_end():
    arc = make_arc(0, X, Y)
    assert travel_tangent(arc, X, 1) == Point3(0, 1, 0)
    assert travel_tangent(arc, Y, 0) == Point3(1, 0, 0)


def test_order_along_is_counterclockwise():
    assert order_along(Z, [Y, Dir3(1, 1, 0), X]) == [X, Dir3(1, 1, 0), Y]


def test_project():
    assert project(Point3(1, 1, 1), Point3(3, 5, 1)) == Dir3(1, 2, 0)
    with pytest.raises(GeometryError):
        project(ORIGIN, ORIGIN)


def test_hosts_record_endpoints_in_relative_interiors():
    first = make_arc(0, X, Y)
    second = make_arc(1, Dir3(1, 1, 0), Z)
    m = VisMap(None, [first, second])
    assert m.host(1, 0) == 0
    assert m.host(1, 1) is None
    assert m.host(0, 0) is None
    assert m.feeds_into == [(1, 0)]


def test_semicircle_selector_must_be_orthogonal():
    with pytest.raises(GeometryError):
        GreatSemicircle(Z, Dir3(1, 0, 1))


def test_semicircle_meets_arc():
    east = GreatSemicircle(Z, X)
    assert semicircle_meets_arc(east, make_arc(0, X, Y))
    assert semicircle_meets_arc(east, make_arc(1, Dir3(1, 0, 1), Dir3(1, 0, -1)))
    assert not semicircle_meets_arc(east, make_arc(2, Dir3(-1, 0, 1), Dir3(-1, 0, -1)))
    assert not semicircle_meets_arc(east, make_arc(3, -X, -Y))


def test_random_semicircle_is_reproducible():
    first = random_semicircle(random.Random(7))
    second = random_semicircle(random.Random(7))
    assert first == second
    assert first.normal.x * first.selector.x + first.normal.y * first.selector.y + first.normal.z * first.selector.z == 0


def test_pierce_test_on_empty_map_fails_every_sample():
    report = semicircle_pierce_test(VisMap(None, []), samples=5, seed=1)
    assert len(report.counterexamples) == 5
    assert not report.passed


def test_viewpoint_seeing_a_vertex_gives_no_sod(tetrahedron):
    built = build_sod(tetrahedron, ORIGIN)
    assert isinstance(built, SodFailure)
    assert len(built.visible_vertices) == 4
    assert built.to_dict()["reason"] == "visible_vertex"


def test_eight_edge_sod(eight_edge, eight_edge_sod):
    assert isinstance(eight_edge_sod, SOD)
    assert len(eight_edge_sod.source_edges) == 8
    assert len(eight_edge_sod.arcs) >= 8
    # every arc end rests on another arc
    for arc in eight_edge_sod.arcs:
        assert eight_edge_sod.host(arc.id, 0) is not None
        assert eight_edge_sod.host(arc.id, 1) is not None
    assert build_vismap(eight_edge, ORIGIN).arcs == eight_edge_sod.arcs


def test_eight_edge_arrangement(eight_edge_sod, eight_edge_arrangement):
    arr = eight_edge_arrangement
    assert arr.components == 1
    assert len(arr.faces) == len(eight_edge_sod.arcs) + 2
    pieces = sum(len(chain) - 1 for chain in arr.pieces.values())
    assert sum(len(face.boundary) for face in arr.faces) == 2 * pieces
    for arc in eight_edge_sod.arcs:
        for end in (0, 1):
            assert arr.piece_ending_at(arc.id, end) in arr.face_of


def test_empty_map_has_one_face():
    arr = build_arrangement(VisMap(None, []))
    assert len(arr.faces) == 1
    assert arr.components == 0


def _loop(corners):
    return VisMap(None, [make_arc(i, a, b) for i, (a, b) in enumerate(zip(corners, corners[1:] + corners[:1]))])


@pytest.mark.parametrize(
    "corners",
    [
        [X, Y, Z],
        [Dir3(1, 1, 1), Dir3(-1, 1, 1), Dir3(-1, -1, 1), Dir3(1, -1, 1)],
    ],
)
def test_closed_loop_splits_the_sphere_in_two(corners):
    faces = enumerate_faces(_loop(corners))
    assert len(faces) == 2
    assert [len(face.boundary) for face in faces] == [len(corners)] * 2
    assert {frozenset(face.vertices) for face in faces} == {frozenset(corners)}


def test_eight_edge_sod_is_pierced_by_every_semicircle(eight_edge_sod):
    assert semicircle_pierce_test(eight_edge_sod, samples=100, seed=3).passed


def test_vismap_file_round_trip(tmp_path, eight_edge_sod):
    path = tmp_path / "sod.json"
    write_json(path, vismap_to_dict(eight_edge_sod))
    loaded = load_vismap(path)
    assert loaded.viewpoint == ORIGIN
    assert loaded.arcs == eight_edge_sod.arcs
    assert loaded.feeds_into == eight_edge_sod.feeds_into


def test_example_document(data_dir):
    m = load_vismap(data_dir / "schemas" / "sod_example.json")
    assert [arc.id for arc in m.arcs] == [0, 1]
    assert m.arc(0).source_edge == "R1.1"
    assert m.host(1, 0) == 0
    assert m.feeds_into == [(1, 0)]


@pytest.mark.parametrize(
    "payload, field",
    [
        ({}, "arcs"),
        ({"arcs": [{"id": 0, "u": [1, 0, 0], "v": [0, 1, 0], "normal": [0, 0, -1]}]}, "arcs[0].normal"),
        ({"arcs": [{"id": 0, "u": [1, 0, 0], "v": [-1, 0, 0]}]}, "arcs[0]"),
        ({"arcs": [{"id": 0, "u": [0, 0, 0], "v": [0, 1, 0]}]}, "arcs[0].u"),
        (
            {"arcs": [{"id": 3, "u": [1, 0, 0], "v": [0, 1, 0]}, {"id": 3, "u": [0, 1, 0], "v": [0, 0, 1]}]},
            "arcs[1].id",
        ),
    ],
)
def test_vismap_from_dict_errors(payload, field):
    with pytest.raises(SceneParseError) as err:
        vismap_from_dict(payload)
    assert err.value.field == field
