from fractions import Fraction

import pytest

from core.errors import GeometryError, SceneError, SceneParseError
from core.exact_geom import INSIDE, OUTSIDE, Point3, point_in_polygon_2d
from core.scene_model import (
    HALF_TURN_X,
    QUARTER_TURN_FLIP,
    Isometry,
    Polygon,
    Polyhedron,
    Scene,
    build_builtins,
    builtin,
    check_symmetry,
    interiors_overlap,
    load_scene,
    make_polygon,
    polygon_image_map,
    polygon_problems,
    save_scene,
    scene_from_dict,
    triangulate,
    validate_polyhedron,
    validate_scene,
    validate_world,
)


def test_builtin_registry_names():
    assert [b.name for b in build_builtins()] == ["tetrahedron", "cube", "brush", "eight_edge_scene"]


@pytest.mark.parametrize("name", ["tetrahedron", "cube", "brush(1)", "brush(2)", "eight_edge_scene"])
def test_builtins_are_valid(name):
    report = validate_world(builtin(name))
    assert report.ok, report.problems


def test_tetrahedron_and_cube_tables(tetrahedron, cube):
    assert len(tetrahedron.edges) == 6
    assert len(tetrahedron.vertex_ids) == 4
    assert len(cube.edges) == 12
    assert len(cube.vertex_ids) == 8
    assert cube.signed_volume() == 1
    assert tetrahedron.signed_volume() > 0


def test_cube_scale_parameter():
    big = builtin("cube", {"scale": "3"})
    assert big.signed_volume() == 27
    assert builtin("cube(1/2)").signed_volume() == Fraction(1, 8)


def test_brush_seams_are_not_edges():
    brush = builtin("brush(1)")
    assert brush.seams
    seam_points = {frozenset(s) for s in brush.seams}
    assert all(frozenset((e.a, e.b)) not in seam_points for e in brush.edges)


@pytest.mark.parametrize(
    "name, params",
    [("dodecahedron", None), ("cube", {"side": "2"}), ("cube", {"scale": "0"}), ("brush", {"k": "3/2"})],
)
def test_builtin_rejects_bad_requests(name, params):
    with pytest.raises(SceneError):
        builtin(name, params)


def test_eight_edge_edge_ids(eight_edge):
    r1 = eight_edge.edge_by_id["R1.0"]
    assert {r1.a, r1.b} == {Point3(5, -1, -15), Point3(5, 1, -15)}
    t1 = eight_edge.edge_by_id["T1.0"]
    assert {t1.a, t1.b} == {Point3(15, -2, 35), Point3(7, 0, -8)}
    assert len(eight_edge.edges) == 20


def test_polygon_problems_detects_bad_shapes():
    assert polygon_problems(make_polygon("line", [(0, 0, 0), (1, 1, 1), (2, 2, 2)])) == ["vertices are collinear"]
    bowtie = make_polygon("bow", [(0, 0, 0), (4, 4, 0), (4, 0, 0), (0, 2, 0)])
    assert "edges 0 and 2 intersect" in polygon_problems(bowtie)
    bent = make_polygon("bent", [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 1)])
    assert any("off the polygon plane" in p for p in polygon_problems(bent))


def test_degenerate_polygon_has_no_plane():
    with pytest.raises(GeometryError):
        make_polygon("line", [(0, 0, 0), (1, 1, 1), (2, 2, 2)]).plane


def test_point_in_polygon_requires_the_plane():
    square = make_polygon("sq", [(0, 0, 0), (2, 0, 0), (2, 2, 0), (0, 2, 0)])
    assert point_in_polygon_2d(square, Point3(1, 1, 0)) == INSIDE
    assert point_in_polygon_2d(square, Point3(3, 1, 0)) == OUTSIDE
    with pytest.raises(GeometryError):
        point_in_polygon_2d(square, Point3(1, 1, 1))


def test_triangulate_nonconvex_polygon():
    ell = make_polygon("L", [(0, 0, 0), (2, 0, 0), (2, 1, 0), (1, 1, 0), (1, 2, 0), (0, 2, 0)])
    triangles = triangulate(ell)
    assert len(triangles) == 4
    area = sum(
        abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) for a, b, c in triangles
    )
    assert area == 6  # twice the area of the L


def test_interiors_overlap_cases():
    base = make_polygon("A", [(0, 0, 0), (4, 0, 0), (0, 4, 0)])
    piercing = make_polygon("B", [(1, 1, -1), (1, 1, 1), (2, -1, 0)])
    touching = make_polygon("C", [(4, 0, 0), (0, 4, 0), (4, 4, 0)])
    above = make_polygon("D", [(0, 0, 1), (4, 0, 1), (0, 4, 1)])
    standing = make_polygon("E", [(0, 0, 0), (4, 0, 0), (0, 0, 3)])
    assert interiors_overlap(base, piercing)
    assert not interiors_overlap(base, touching)
    assert not interiors_overlap(base, above)
    assert not interiors_overlap(base, standing)


def test_validate_scene_reports_overlap_and_duplicates():
    a = make_polygon("A", [(0, 0, 0), (4, 0, 0), (0, 4, 0)])
    b = make_polygon("B", [(1, 1, -1), (1, 1, 1), (2, -1, 0)])
    report = validate_scene(Scene([a, b, make_polygon("A", [(9, 9, 9), (10, 9, 9), (9, 10, 9)])]))
    kinds = {p["kind"] for p in report.problems}
    assert kinds == {"overlap", "duplicate_id"}
    assert report.to_dict()["valid"] is False


def test_validate_polyhedron_catches_open_and_inverted_surfaces(cube):
    open_box = Polyhedron(cube.polygons[:-1])
    assert not validate_polyhedron(open_box).ok
    inverted = Polyhedron([Polygon(p.id, tuple(reversed(p.vertices))) for p in cube.polygons])
    kinds = [p["kind"] for p in validate_polyhedron(inverted).problems]
    assert kinds == ["orientation"]


def test_symmetries_of_eight_edge_scene(eight_edge):
    assert polygon_image_map(eight_edge, HALF_TURN_X) == {
        "R1": "R1",
        "R2": "R2",
        "T1": "T3",
        "T2": "T4",
        "T3": "T1",
        "T4": "T2",
    }
    assert polygon_image_map(eight_edge, QUARTER_TURN_FLIP)["T4"] == "T1"
    assert QUARTER_TURN_FLIP.power(4).is_identity()
    assert not QUARTER_TURN_FLIP.power(2).is_identity()
    assert not check_symmetry(eight_edge, Isometry.translate(1, 0, 0))


def test_scene_file_matches_builtin(data_dir, eight_edge):
    assert load_scene(data_dir / "scenes" / "eight_edge_scene.json") == eight_edge


def test_closed_scene_file_loads_as_polyhedron(data_dir):
    solid = load_scene(data_dir / "scenes" / "unit_tetrahedron.json")
    assert solid.is_polyhedron
    assert solid.signed_volume() == Fraction(1, 6)
    assert validate_polyhedron(solid).ok


def test_save_and_load_keep_semantics(tmp_path, cube):
    path = tmp_path / "cube.json"
    save_scene(cube, path)
    assert load_scene(path) == cube


def test_scene_from_dict_errors_name_the_field():
    with pytest.raises(SceneParseError) as missing:
        scene_from_dict({})
    assert missing.value.field == "polygons"
    with pytest.raises(SceneParseError) as bad:
        scene_from_dict({"polygons": [{"id": "A", "vertices": [["0", "0", "0"], ["1", "x", "0"], ["0", "1", "0"]]}]})
    assert bad.value.field == "polygons[0].vertices[1][1]"
    with pytest.raises(SceneError):
        scene_from_dict({"closed": True, "polygons": [{"id": "A", "vertices": [[0, 0, 0], [1, 0, 0], [0, 1, 0]]}]})


def test_broken_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "polygons": [\n    oops\n  ]\n}', encoding="utf-8")
    with pytest.raises(SceneParseError) as err:
        load_scene(path)
    assert err.value.line == 3
