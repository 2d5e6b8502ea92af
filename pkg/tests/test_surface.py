import json

import pytest

from boundary_qp import constructions
from boundary_qp.algebra import IceQP, is_homogeneous
from boundary_qp.construct import UnsupportedKind, standard_triangulation
from boundary_qp.constructions.annulus import annulus_11
from boundary_qp.constructions.polygons import fan, star
from boundary_qp.surface import (
    INCIDENT_ONLY,
    DegenerateSurface,
    Edge,
    InvalidTriangulation,
    NotAnArc,
    SurfaceSignature,
    Triangle,
    Triangulation,
    arc_count,
    build_ice_qp,
    canonical_key,
    corner_path,
    external_id,
    flip,
    flip_orbit,
    load_triangulation,
    new_arc,
    validate_triangulation,
)


@pytest.mark.parametrize(
    "genus, boundary, punctures, expected",
    [
        (0, (7,), 0, 4),
        (0, (4,), 1, 4),
        (0, (1, 1), 0, 2),
        (1, (1,), 0, 4),
        (0, (5,), 2, 8),
        (0, (), 4, 6),
    ],
)
def test_arc_count(genus, boundary, punctures, expected):
    assert arc_count(SurfaceSignature(genus, boundary, punctures)) == expected


@pytest.mark.parametrize(
    "genus, boundary, punctures",
    [(0, (1,), 0), (0, (1,), 1), (0, (3,), 0), (0, (), 3), (0, (0,), 2)],
)
def test_excluded_surfaces(genus, boundary, punctures):
    with pytest.raises(DegenerateSurface):
        arc_count(SurfaceSignature(genus, boundary, punctures))


def test_heptagon_fan_qp():
    qp: IceQP = build_ice_qp(fan(7))
    assert len(qp.quiver.vertices) == 11
    assert len(qp.frozen_vertices) == 7
    assert len(qp.quiver.arrows) == 22
    lengths = sorted(len(p) for p, _ in qp.potential)
    assert lengths.count(3) >= 5
    assert len(qp.potential) == 12
    assert len(qp.external) == 7


def test_punctured_square_star_qp():
    T: Triangulation = star(4)
    qp: IceQP = build_ice_qp(T)
    assert len(qp.quiver.vertices) == 8
    assert len(qp.quiver.arrows) == 16
    assert len(qp.potential) == 9
    assert [c for p, c in qp.potential if len(p) == 4] == [-1]
    assert len(corner_path(T, "p1")) == 4


@pytest.mark.parametrize(
    "T", [fan(4), fan(7), star(4), star(5)], ids=["fan4", "fan7", "star4", "star5"]
)
def test_disk_potentials_are_homogeneous(T):
    qp: IceQP = build_ice_qp(T)
    assert is_homogeneous(qp.potential, qp.weights)
    assert not any(d.kind == "loop" for d in qp.diagnostics())
    m: int = T.signature.c
    expected: int = m - 2 if not T.punctures else 2 * m - 2
    for point in T.boundary_points[0]:
        assert sum(qp.weight(a) for a in corner_path(T, point)) == expected
        assert qp.weight(external_id(point)) == 2


def test_external_arrows_run_along_the_boundary():
    T: Triangulation = fan(5)
    qp: IceQP = build_ice_qp(T)
    y = qp.quiver.arrow(external_id("3"))
    assert (y.src, y.tgt) == (T.segment_before("3"), T.segment_after("3"))
    assert (y.src, y.tgt) == ("b3", "b4")


def test_incident_only_variant_skips_untouched_points():
    qp: IceQP = build_ice_qp(fan(5), INCIDENT_ONLY)
    assert qp.external == ("Y1", "Y3", "Y4")


def test_square_file_matches_the_fan(fixture_path):
    assert load_triangulation(fixture_path("square.json")) == fan(4)


def test_document_survives_reloading(tmp_path):
    path = tmp_path / "star.json"
    path.write_text(json.dumps(star(5).to_json()))
    assert load_triangulation(str(path)) == star(5)


def test_missing_triangle_is_diagnosed():
    T: Triangulation = fan(4)
    broken: Triangulation = Triangulation.build(
        T.signature, T.boundary_points, T.punctures, T.edges, T.triangles[:1]
    )
    kinds = {d.kind for d in validate_triangulation(broken)}
    assert {"slot-count", "triangle-count"} <= kinds
    with pytest.raises(InvalidTriangulation):
        build_ice_qp(broken)


def test_unknown_side_is_rejected(fixture_path, tmp_path):
    with open(fixture_path("square.json"), encoding="utf-8") as fp:
        data = json.load(fp)
    data["triangles"][1] = ["b1", "b4", "d9_9"]
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(data))
    with pytest.raises(InvalidTriangulation):
        load_triangulation(str(path))


def test_flip_in_a_pentagon():
    T: Triangulation = fan(5)
    T2: Triangulation = flip(T, "d1_3")
    assert new_arc(T, T2, "d1_3") == "d2_4"
    assert T2.edges[T.edge_index["d1_3"]].ends == ("2", "4")
    assert not validate_triangulation(T2)


@pytest.mark.parametrize("T", [fan(5), fan(6), star(4)], ids=["fan5", "fan6", "star4"])
def test_flip_is_an_involution(T):
    for edge in T.arcs:
        flipped: Triangulation = flip(T, edge.id)
        assert flip(flipped, new_arc(T, flipped, edge.id)) == T


def test_boundary_segments_cannot_be_flipped():
    with pytest.raises(NotAnArc):
        flip(fan(5), "b1")
    with pytest.raises(NotAnArc):
        flip(fan(5), "nope")


@pytest.mark.parametrize("m, size", [(4, 2), (5, 5), (6, 14), (7, 42)])
def test_polygon_flip_orbits_are_catalan(m, size):
    orbit = flip_orbit(fan(m))
    assert len(orbit) == size
    assert not orbit.overflow
    assert orbit.graph.number_of_edges() == size * (m - 3) // 2


def test_flip_orbit_overflow():
    orbit = flip_orbit(fan(7), max_size=10)
    assert len(orbit) == 10
    assert orbit.overflow


def test_canonical_key_ignores_arc_names():
    T: Triangulation = fan(5)

    def rename(side: str) -> str:
        return "z" if side == "d1_3" else side

    renamed: Triangulation = Triangulation.build(
        T.signature,
        T.boundary_points,
        T.punctures,
        [Edge(rename(e.id), e.ends, e.kind) for e in T.edges],
        [Triangle(tuple(rename(s) for s in t.sides), t.corners) for t in T.triangles],
    )
    assert renamed != T
    assert canonical_key(renamed) == canonical_key(T)
    assert canonical_key(flip(T, "d1_3")) != canonical_key(T)


def test_polygon_constructions_by_puncture_count():
    assert standard_triangulation("polygon", n=2) == fan(5)
    assert standard_triangulation("polygon", n=2, p=1) == star(5)
    twice: Triangulation = standard_triangulation("polygon", n=2, p=2)
    assert twice.punctures == ("p1", "p2")
    assert len(twice.arcs) == 8
    assert not validate_triangulation(twice)
    build_ice_qp(twice)


def test_construction_errors():
    with pytest.raises(UnsupportedKind):
        standard_triangulation("no-such-kind")
    with pytest.raises(UnsupportedKind):
        standard_triangulation("fan", m=3)
    with pytest.raises(UnsupportedKind):
        standard_triangulation("polygon", n=1, p=2)


def test_annulus_qp_has_boundary_loops():
    T: Triangulation = annulus_11()
    assert not validate_triangulation(T)
    qp: IceQP = build_ice_qp(T)
    assert qp.boundary == (("b1",), ("b2",))
    assert {d.location for d in qp.diagnostics() if d.kind == "loop"} == {("b1",), ("b2",)}
    assert qp.weights == {}


def test_plugins_publish_their_constructions():
    kinds = constructions.import_constructions()
    assert {"fan", "star", "polygon", "annulus_11", "custom-file"} <= set(kinds)
    assert "TwicePuncturedPolygon" in constructions.__all__
    assert "polygons" in constructions.__all__
