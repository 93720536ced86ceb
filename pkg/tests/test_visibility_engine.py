from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import SceneError
from core.exact_geom import ORIGIN, Point3, point_on_segment
from core.scene_model import Scene, brush_tip, builtin, make_polygon
from core.visibility_engine import (
    EXTERIOR,
    INTERIOR,
    ON_BOUNDARY,
    ParamInterval,
    classify_point,
    count_visible_edges,
    detect_split_edge,
    sees_edge_point,
    sees_point,
    sees_positive_portion,
    visibility_report,
    visible_sets_by_edge,
    visible_subsegments,
    visible_vertices,
)

HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def shaded():
    # a unit square at z=1 casting a shadow on the long edge of a triangle at z=2
    return Scene(
        [
            make_polygon("S", [(-1, -1, 1), (1, -1, 1), (1, 1, 1), (-1, 1, 1)]),
            make_polygon("T", [(-5, 0, 2), (5, 0, 2), (0, 10, 2)]),
        ]
    )


def test_param_interval_membership():
    iv = ParamInterval(Fraction(0), Fraction(3, 10), lo_closed=True, hi_closed=False)
    assert iv.contains(0)
    assert iv.contains(Fraction(1, 10))
    assert not iv.contains(Fraction(3, 10))
    assert not iv.degenerate
    assert ParamInterval(HALF, HALF).degenerate


def test_scene_point_visibility(shaded):
    assert not sees_point(shaded, ORIGIN, Point3(0, 0, 2))
    assert sees_point(shaded, ORIGIN, Point3(0, 5, 2))
    # grazing the square's edge still counts as crossing it
    assert not sees_point(shaded, ORIGIN, Point3(2, 0, 2))
    assert sees_point(shaded, ORIGIN, ORIGIN)


def test_shadow_splits_an_edge(shaded):
    vs = visible_subsegments(shaded, ORIGIN, "T.0")
    assert vs.intervals == (
        ParamInterval(Fraction(0), Fraction(3, 10), True, False),
        ParamInterval(Fraction(7, 10), Fraction(1), False, True),
    )
    assert vs.contains(Fraction(1, 10))
    assert not vs.contains(HALF)
    assert not vs.contains(Fraction(7, 10))


def test_scene_report_counts(shaded):
    report = visibility_report(shaded, ORIGIN)
    assert report.weak_count == 6
    assert report.positive_count == 6
    assert report.segment_count == 8
    assert report.split_edges == ["T.0"]
    assert report.point_class is None
    assert len(report.visible_vertices) == 7
    assert detect_split_edge(shaded, ORIGIN, report) == "T.0"
    assert count_visible_edges(shaded, ORIGIN, report).segments == 8


def test_unknown_edge_is_rejected(shaded):
    with pytest.raises(SceneError):
        visible_subsegments(shaded, ORIGIN, "T.9")


def test_classify_points_of_the_cube(cube):
    assert classify_point(cube, Point3(HALF, HALF, HALF)).kind == INTERIOR
    assert classify_point(cube, Point3(HALF, HALF, 3)).kind == EXTERIOR
    assert classify_point(cube, Point3(-1, -1, -1)).kind == EXTERIOR
    corner = classify_point(cube, ORIGIN)
    assert corner.kind == ON_BOUNDARY
    assert corner.feature == cube.vertex_ids[ORIGIN]
    on_edge = classify_point(cube, Point3(HALF, 0, 0))
    assert on_edge.feature in cube.edge_by_id
    assert classify_point(cube, Point3(HALF, HALF, 0)).feature == "z0"


def test_polyhedron_point_visibility(cube):
    centre = Point3(HALF, HALF, HALF)
    outside = Point3(HALF, HALF, 3)
    assert sees_point(cube, centre, ORIGIN)
    assert not sees_point(cube, outside, centre)
    assert sees_point(cube, outside, Point3(1, 1, 1))
    # along the top face: neither inside nor outside is crossed
    assert sees_point(cube, Point3(0, 0, 1), Point3(1, 1, 1))
    # bottom corner is behind the cube
    assert not sees_point(cube, outside, ORIGIN)


def test_edge_points_are_hidden_by_other_edges(cube):
    # a viewing segment running along an edge passes through that edge
    assert not sees_edge_point(cube, Point3(-1, 0, 0), Point3(1, 0, 0))
    assert sees_edge_point(cube, Point3(-1, 0, 0), ORIGIN)


def test_cube_from_inside_sees_everything(cube):
    report = visibility_report(cube, Point3(HALF, HALF, HALF))
    assert report.weak_count == 12
    assert report.positive_count == 12
    assert report.point_class.kind == INTERIOR
    for vs in report.visible_sets:
        assert vs.intervals == (ParamInterval(Fraction(0), Fraction(1)),)
    assert len(report.visible_vertices) == 8


def test_cube_from_above(cube):
    report = visibility_report(cube, Point3(HALF, HALF, 3))
    assert report.weak_count == 8
    assert report.positive_count == 4
    assert len(report.visible_vertices) == 4
    assert report.split_edges == []


def test_tetrahedron_from_outside_and_inside(tetrahedron):
    outside = visibility_report(tetrahedron, Point3(-HALF, -HALF, -HALF))
    assert (outside.weak_count, outside.positive_count) == (6, 3)
    assert outside.point_class.kind == EXTERIOR
    inside = visibility_report(tetrahedron, ORIGIN)
    assert (inside.weak_count, inside.positive_count) == (6, 6)
    assert inside.point_class.kind == INTERIOR


@pytest.mark.parametrize("k, i, j", [(1, 0, 0), (2, 0, 0), (2, 1, 1)])
def test_brush_tip_is_inside_a_spike(k, i, j):
    brush = builtin(f"brush({k})")
    report = visibility_report(brush, brush_tip(k, i, j))
    assert report.point_class.kind == INTERIOR
    assert report.weak_count == report.positive_count == 6


def test_eight_edge_scene_from_origin(eight_edge, eight_edge_report):
    assert eight_edge_report.weak_count == 8
    assert eight_edge_report.positive_count == 8
    assert eight_edge_report.visible_vertices == []
    assert visible_vertices(eight_edge, ORIGIN) == []
    by_edge = visible_sets_by_edge(eight_edge_report.visible_sets)
    assert by_edge["R1.0"].is_empty
    assert by_edge["T1.0"].is_empty
    assert by_edge["T1.2"].is_empty
    assert by_edge["T1.1"].positive
    assert sees_point(eight_edge, ORIGIN, Point3(0, 0, 100))


def test_report_payload_lists_only_seen_edges(eight_edge_report):
    payload = eight_edge_report.to_dict()
    assert payload["weak_count"] == 8
    assert len(payload["edges"]) == 8
    assert payload["point"] == ["0", "0", "0"]
    assert "point_class" not in payload


@pytest.mark.parametrize(
    "p, on_p",
    [(Point3(1, 1, 1), 3), (Point3(Fraction(1, 3), -1, Fraction(-1, 3)), 1)],
)
def test_boundary_points_see_the_edges_through_them(tetrahedron, p, on_p):
    report = visibility_report(tetrahedron, p)
    assert report.point_class.kind == ON_BOUNDARY
    assert report.positive_count == 6
    assert sorted(report.positive_edges) == sorted(edge.id for edge in tetrahedron.edges)
    through_p = [edge for edge in tetrahedron.edges if point_on_segment(p, edge.a, edge.b)]
    assert len(through_p) == on_p
    for edge in through_p:
        # the closed edge blocks its own visible set, yet every point of it is seen
        assert not report.visible_set(edge.id).positive
        assert sees_positive_portion(tetrahedron, p, edge)
        assert all(sees_point(tetrahedron, p, edge.point(Fraction(k, 8))) for k in range(9))


def test_exterior_point_off_every_edge_line_keeps_its_count(tetrahedron):
    report = visibility_report(tetrahedron, Point3(-HALF, -HALF, -HALF))
    assert report.positive_count == 3
    assert len(report.positive_edges) == 3
    assert report.to_dict()["positive_edges"] == report.positive_edges


def test_tetrahedron_hidden_edges_show_only_an_endpoint(tetrahedron):
    report = visibility_report(tetrahedron, Point3(-HALF, -HALF, -HALF))
    hidden = [vs for vs in report.visible_sets if not vs.positive]
    assert len(hidden) == 3
    for vs in hidden:
        assert len(vs.intervals) == 1
        (iv,) = vs.intervals
        assert iv.degenerate
        assert iv.lo in (0, 1)


view_coords = st.fractions(min_value=-20, max_value=20, max_denominator=6)
view_points = st.builds(Point3, view_coords, view_coords, view_coords)


@settings(max_examples=40, deadline=None)
@given(p=view_points, q=view_points)
def test_point_visibility_is_symmetric_in_the_cube(cube, p, q):
    assert sees_point(cube, p, q) == sees_point(cube, q, p)


@settings(max_examples=40, deadline=None)
@given(p=view_points, q=view_points)
def test_point_visibility_is_symmetric_in_a_scene(eight_edge, p, q):
    assert sees_point(eight_edge, p, q) == sees_point(eight_edge, q, p)


def _sample_params(vs):
    ts = {Fraction(k, 32) for k in range(33)}
    for iv in vs.intervals:
        ts.update((iv.lo, iv.hi, (iv.lo + iv.hi) * HALF))
    return sorted(ts)


@pytest.mark.parametrize("removed", ["R1", "R2", "T1", "T3"])
@pytest.mark.parametrize("p", [ORIGIN, Point3(1, 2, 3), Point3(0, 0, 20)])
def test_adding_a_polygon_never_enlarges_a_visible_set(eight_edge, removed, p):
    smaller = Scene([poly for poly in eight_edge.polygons if poly.id != removed])
    fewer = visible_sets_by_edge(visibility_report(smaller, p).visible_sets)
    for vs in visibility_report(eight_edge, p).visible_sets:
        if vs.edge.startswith(f"{removed}."):
            continue
        before = fewer[vs.edge]
        for t in _sample_params(vs):
            if vs.contains(t):
                assert before.contains(t), (vs.edge, t)
