import random

import pytest

from core.errors import InvariantViolation, SceneError
from core.exact_geom import ORIGIN, Dir3
from core.sod_analysis import (
    CCW,
    CW,
    TURN,
    Hemisphere,
    SemicircleCover,
    analyze,
    arc_union_connected,
    check_axioms,
    check_cover,
    contact_graph,
    find_swirls,
    four_swirl_witness,
    induced_cover,
    prune_unblocking_arcs,
    require_sod,
    successor,
    swirl_graph,
    swirl_in_hemisphere,
    uncovered_arcs,
)
from core.sphere_map import VisMap, load_vismap, make_arc, random_direction

X, Y = Dir3(1, 0, 0), Dir3(0, 1, 0)


@pytest.fixture(scope="module")
def eight_edge_swirls(eight_edge_sod, eight_edge_arrangement):
    return find_swirls(eight_edge_sod, eight_edge_arrangement)


def test_eight_edge_sod_passes_the_axioms(eight_edge_sod):
    report = check_axioms(eight_edge_sod)
    assert report.passed
    assert set(report.to_dict()) == {"passed", "noncrossing", "blocked", "one_sided"}
    assert arc_union_connected(eight_edge_sod)


def test_crossing_arcs_break_noncrossing_axiom():
    m = VisMap(None, [make_arc(0, X, Y), make_arc(1, Dir3(1, 1, 1), Dir3(1, 1, -1))])
    report = check_axioms(m)
    assert not report.noncrossing
    assert report.witnesses["noncrossing"][0]["arcs"] == [0, 1]


def test_feeders_from_both_sides_break_one_sided_axiom():
    m = VisMap(
        None,
        [
            make_arc(0, X, Y),
            make_arc(1, Dir3(1, 1, 1), Dir3(1, 1, 0)),
            make_arc(2, Dir3(2, 1, -1), Dir3(2, 1, 0)),
        ],
    )
    report = check_axioms(m)
    assert report.noncrossing
    assert not report.blocked
    assert not report.one_sided
    assert report.witnesses["one_sided"] == [{"arc": 0, "feeders": {"-1": [2], "1": [1]}}]


def test_example_document_is_not_a_diagram(data_dir):
    m = load_vismap(data_dir / "schemas" / "sod_example.json")
    report = check_axioms(m)
    assert not report.blocked
    with pytest.raises(InvariantViolation):
        require_sod(m)
    with pytest.raises(InvariantViolation):
        successor(m, (0, 0), TURN[CCW])


def test_swirls_of_eight_edge_sod(eight_edge_sod, eight_edge_swirls):
    swirls = eight_edge_swirls
    assert len(swirls) >= 4
    assert {sw.orientation for sw in swirls} == {CCW, CW}
    assert swirls == sorted(swirls, key=lambda sw: sw.key)
    for sw in swirls:
        assert len(sw.arcs) >= 3
        assert sw.arcs[0] == min(sw.arcs)
        turn = TURN[sw.orientation]
        states = list(zip(sw.arcs, sw.ends))
        for here, there in zip(states, states[1:] + states[:1]):
            assert successor(eight_edge_sod, here, turn) == there


def test_each_arc_on_at_most_one_swirl_per_orientation(eight_edge_sod, eight_edge_swirls):
    for arc in eight_edge_sod.arcs:
        for orientation in (CCW, CW):
            owners = [sw for sw in eight_edge_swirls if sw.orientation == orientation and arc.id in sw.arcs]
            assert len(owners) <= 1


def test_swirl_graph_is_bipartite_between_orientations(eight_edge_sod, eight_edge_swirls):
    sg = swirl_graph(eight_edge_sod, eight_edge_swirls)
    for i, j, _arc in sg.shared_arcs:
        assert sg.swirls[i].orientation != sg.swirls[j].orientation
    n = len(sg.swirls)
    assert len(sg.shared_arcs) <= 2 * n - 4


def test_contact_graph_has_out_degree_two(eight_edge_sod):
    contact = contact_graph(eight_edge_sod)
    assert contact.graph.number_of_edges() == 2 * len(eight_edge_sod.arcs)
    assert not any(contact.graph.has_edge(b, a) for a, b in contact.graph.edges)
    if contact.planar:
        assert len(eight_edge_sod.arcs) >= 6


@pytest.mark.parametrize("pole", [Dir3(1, 0, 0), Dir3(-1, 0, 0), Dir3(3, 5, 7), Dir3(-3, -5, -7)])
def test_every_hemisphere_holds_an_eye(eight_edge_sod, eight_edge_arrangement, eight_edge_swirls, pole):
    h = Hemisphere(pole)
    sw = swirl_in_hemisphere(eight_edge_sod, h, eight_edge_swirls, eight_edge_arrangement)
    assert sw in eight_edge_swirls
    assert all(h.contains(d) for d in eight_edge_arrangement.faces[sw.eye].vertices)


def test_random_hemispheres_each_hold_an_eye(eight_edge_sod, eight_edge_arrangement, eight_edge_swirls):
    rng = random.Random(11)
    for _ in range(100):
        h = Hemisphere(Dir3.of(random_direction(rng, 20)))
        sw = swirl_in_hemisphere(eight_edge_sod, h, eight_edge_swirls, eight_edge_arrangement)
        assert sw in eight_edge_swirls
        assert all(h.contains(d) for d in eight_edge_arrangement.faces[sw.eye].vertices)


def test_four_swirl_witness(eight_edge_sod, eight_edge_arrangement, eight_edge_swirls):
    witness = four_swirl_witness(eight_edge_sod, eight_edge_swirls, eight_edge_arrangement)
    assert len({sw.key for sw in witness}) == 4
    assert witness[0].orientation == CCW
    assert witness[1].orientation == CW


def test_induced_cover_of_eight_edge_scene(eight_edge, eight_edge_sod):
    cover = induced_cover(eight_edge, ORIGIN, eight_edge_sod)
    assert len(cover) == 8
    assert check_cover(eight_edge_sod, cover)
    assert {sc.source_edge for sc in cover.members} == set(eight_edge_sod.source_edges)
    partial = SemicircleCover(cover.members[1:])
    assert uncovered_arcs(eight_edge_sod, partial)
    assert not check_cover(eight_edge_sod, partial)
    assert not check_cover(eight_edge_sod, SemicircleCover([]))


def test_induced_cover_needs_a_world_diagram(eight_edge, eight_edge_sod):
    abstract = VisMap(None, eight_edge_sod.arcs)
    with pytest.raises(SceneError):
        induced_cover(eight_edge, ORIGIN, abstract)


def test_pruning_keeps_only_blocking_arcs(eight_edge_sod):
    pruned = prune_unblocking_arcs(eight_edge_sod)
    hosts = {host for _, host in pruned.feeds_into}
    assert {arc.id for arc in pruned.arcs} == hosts
    assert len(pruned.arcs) >= 8
    assert check_axioms(pruned).passed


def test_full_analysis_of_eight_edge_sod(eight_edge, eight_edge_sod):
    analysis = analyze(eight_edge_sod, world=eight_edge, pierce_samples=50, hemisphere_samples=10, seed=2)
    assert analysis.failures == []
    checks = analysis.checks()
    assert checks["cover_at_least_eight"]
    assert checks["semicircles_pierced"]
    assert analysis.face_count == analysis.arc_count + 2
    payload = analysis.to_dict()
    assert payload["hemispheres_walked"] == 10
    assert len(payload["four_swirl_witness"]) == 4


def test_analysis_rejects_non_diagrams(data_dir):
    with pytest.raises(InvariantViolation):
        analyze(load_vismap(data_dir / "schemas" / "sod_example.json"))
