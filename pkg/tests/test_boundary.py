import dataclasses
import json

import pytest

from boundary_qp.boundary import (
    EXPLICIT_FLIP,
    RELATION_CORRESPONDENCE,
    BoundaryError,
    BoundaryProfile,
    EmptyBoundary,
    IsoWitness,
    OutOfRange,
    Verdict,
    boundary_bijections,
    boundary_profile,
    check_presentation,
    compare_profiles,
    flip_pair,
    flip_witness,
    identity_witness,
    load_presentation,
    oracle_check,
    orbit_check,
    polygon_oracle,
    search_witness,
    variant_agreement,
    verify_witness,
)
from boundary_qp.constructions.polygons import fan, star
from boundary_qp.surface import Triangulation, flip, new_arc


def profile(dims, components) -> BoundaryProfile:
    frozen = tuple(v for c in components for v in c)
    return BoundaryProfile(frozen, dims, 1, tuple(components))


def test_square_profile(square_qp):
    p: BoundaryProfile = boundary_profile(square_qp, 6)
    assert p.frozen_vertices == ("2", "3")
    assert p.counts("2", "3") == (0, 1, 0, 0, 0, 0, 0)
    assert p.counts("3", "2") == (0, 0, 0, 1, 0, 0, 0)
    assert p.total("3", "3") == 1
    assert BoundaryProfile.from_json(json.loads(json.dumps(p.to_json()))) == p


def test_profile_needs_frozen_vertices(square_qp_unfrozen):
    with pytest.raises(EmptyBoundary):
        boundary_profile(square_qp_unfrozen, 6)


def test_bijections_preserve_cyclic_order():
    assert len(list(boundary_bijections([["a", "b", "c", "d"]], [["1", "2", "3", "4"]]))) == 8
    rotations = list(
        boundary_bijections([["a", "b", "c", "d"]], [["1", "2", "3", "4"]], reflections=False)
    )
    assert rotations[0] == {"a": "1", "b": "2", "c": "3", "d": "4"}
    assert {"a": "2", "b": "3", "c": "4", "d": "1"} in rotations
    assert len(rotations) == 4
    assert len(list(boundary_bijections([["a"], ["b"]], [["1"], ["2"]]))) == 2
    assert list(boundary_bijections([["a", "b"]], [["1"], ["2"]])) == []


def test_compare_finds_a_rotation():
    a = profile({"u": {"u": (1, 0), "v": (0, 1)}, "v": {"u": (0, 0), "v": (1, 0)}}, [("u", "v")])
    b = profile({"p": {"p": (1, 0), "q": (0, 0)}, "q": {"p": (0, 1), "q": (1, 0)}}, [("p", "q")])
    verdict: Verdict = compare_profiles(a, b)
    assert verdict.passed
    assert verdict.bijection == {"u": "q", "v": "p"}


def test_compare_reports_the_first_discrepancy():
    a = profile({"u": {"u": (1, 0), "v": (0, 1)}, "v": {"u": (0, 1), "v": (1, 0)}}, [("u", "v")])
    b = profile({"p": {"p": (1, 0), "q": (0, 1)}, "q": {"p": (0, 0), "q": (1, 0)}}, [("p", "q")])
    verdict: Verdict = compare_profiles(a, b)
    assert not verdict.passed
    assert verdict.failed_condition == "dims"
    assert verdict.first_discrepancy == ("v", "u", 1)
    assert "first discrepancy at v -> u, degree 1" in str(verdict)


def test_compare_structural_failures():
    a = profile({"u": {"u": (1, 0)}}, [("u",)])
    b = profile({"p": {"p": (1, 0), "q": (0, 0)}, "q": {"p": (0, 0), "q": (1, 0)}}, [("p", "q")])
    assert compare_profiles(a, b).failed_condition == "frozen-count"
    c = profile({"p": {"p": (1, 0), "q": (0, 0)}, "q": {"p": (0, 0), "q": (1, 0)}}, [("p",), ("q",)])
    assert compare_profiles(b, c).failed_condition == "boundary-structure"


def test_flip_witness_verifies():
    T: Triangulation = fan(5)
    src, dst, witness, T2 = flip_pair(T, "d1_3")
    assert witness.provenance == EXPLICIT_FLIP
    assert witness.local is not None
    assert witness.local.new_arc == "d2_4"
    assert len(witness.local.src_relations) == len(witness.local.dst_relations) == 8
    assert witness.local.correspondence == RELATION_CORRESPONDENCE
    verdict: Verdict = verify_witness(witness, src, dst, 8)
    assert verdict.passed, str(verdict)
    assert verdict.to_json()["status"] == "pass"


def test_flip_map_sends_each_relation_to_its_partner():
    src, _, witness, _ = flip_pair(fan(6), "d1_3")
    local = witness.local
    assert local is not None
    assert local.mismatches(src) == []
    image = local.transport(local.dst_relations["e"], src)
    assert local.shortcut(image) == local.shortcut(local.src_relations["c"])
    image = local.transport(local.dst_relations["e'"], src)
    assert local.shortcut(image) == local.shortcut(-local.src_relations["a'"])


def test_flip_at_a_spoke_keeps_the_correspondence():
    src, _, witness, _ = flip_pair(star(4), "d1_p1")
    assert witness.local is not None
    assert witness.local.new_arc == "d2_4"
    assert witness.local.mismatches(src) == []


def test_scaled_relations_fail_the_local_check():
    src, dst, witness, _ = flip_pair(fan(6), "d1_3")
    assert witness.local is not None
    scaled = dataclasses.replace(
        witness.local,
        dst_relations={k: r.scale(7) for k, r in witness.local.dst_relations.items()},
    )
    verdict: Verdict = verify_witness(dataclasses.replace(witness, local=scaled), src, dst, 8)
    assert not verdict.passed
    assert verdict.failed_condition == "local"
    assert "(e) -> (c)" in verdict.detail


def test_exchanged_relations_fail_the_local_check():
    src, dst, witness, _ = flip_pair(fan(5), "d1_3")
    assert witness.local is not None
    relations = dict(witness.local.dst_relations)
    relations["g"], relations["h"] = relations["h"], relations["g"]
    local = dataclasses.replace(witness.local, dst_relations=relations)
    verdict: Verdict = verify_witness(dataclasses.replace(witness, local=local), src, dst, 8)
    assert verdict.failed_condition == "local"
    assert "(g) -> (a)" in verdict.detail


def test_swapped_generator_images_fail_condition_one():
    src, dst, witness, _ = flip_pair(fan(5), "d1_3")
    by_name = {g.name: g for g in witness.generators}
    assert by_name["x5"].source_ends == by_name["z5"].source_ends
    swap = {"x5": by_name["z5"].image, "z5": by_name["x5"].image}
    generators = [
        dataclasses.replace(g, image=swap[g.name]) if g.name in swap else g
        for g in witness.generators
    ]
    verdict: Verdict = verify_witness(
        dataclasses.replace(witness, generators=generators), src, dst, 8
    )
    assert not verdict.passed
    assert verdict.failed_condition == "(i)"
    assert verdict.detail.startswith("relation ")


def test_flip_back_composes_to_the_identity():
    T: Triangulation = fan(5)
    T2: Triangulation = flip(T, "d1_3")
    there: IsoWitness = flip_witness(T, "d1_3")
    back: IsoWitness = flip_witness(T2, new_arc(T, T2, "d1_3"))
    assert there.compose(back).is_identity()
    assert not there.is_identity()


def test_wrong_vertex_map_fails_condition_one():
    src, dst, witness, _ = flip_pair(fan(5), "d1_3")
    frozen = src.frozen_vertices
    rotated = {v: frozen[(i + 1) % len(frozen)] for i, v in enumerate(frozen)}
    broken = dataclasses.replace(witness, vertex_bijection=rotated)
    verdict: Verdict = verify_witness(broken, src, dst, 8)
    assert not verdict.passed
    assert verdict.failed_condition == "(i)"


def test_missing_generators_fail_condition_two():
    src, dst, witness, _ = flip_pair(fan(5), "d1_3")
    broken = dataclasses.replace(
        witness, generators=[g for g in witness.generators if g.name.startswith("x")]
    )
    verdict: Verdict = verify_witness(broken, src, dst, 8)
    assert not verdict.passed
    assert verdict.failed_condition == "(ii)"
    assert verdict.first_discrepancy is not None


def test_identity_witness_verifies(square_qp):
    witness: IsoWitness = identity_witness(square_qp, 6)
    assert witness.is_identity()
    assert {g.name for g in witness.generators} == {"b", "c.d.a"}
    assert verify_witness(witness, square_qp, square_qp, 6).passed


def test_search_finds_the_rotation():
    T: Triangulation = fan(5)
    verdict: Verdict = search_witness(T, flip(T, "d1_4"), 8)
    assert verdict.passed, str(verdict)
    assert verdict.witness is not None


@pytest.mark.parametrize("n", [1, 2])
def test_unpunctured_polygon_matches_the_oracle(n):
    assert oracle_check(fan(n + 3), n, 0, 12).passed


def test_punctured_polygon_matches_the_oracle():
    assert oracle_check(star(4), 1, 1, 12).passed


@pytest.mark.slow
@pytest.mark.parametrize("n, p", [(3, 0), (2, 1)])
def test_larger_polygons_match_the_oracle(n, p):
    T: Triangulation = fan(n + 3) if p == 0 else star(n + 3)
    assert oracle_check(T, n, p, 12).passed


def test_oracle_ranges():
    with pytest.raises(OutOfRange):
        polygon_oracle(0, 0, 4)
    with pytest.raises(OutOfRange):
        polygon_oracle(1, 3, 4)
    presentation, oracle = polygon_oracle(1, 0, 6)
    assert len(presentation.relations) == 8
    assert oracle.frozen_vertices == ("1", "2", "3", "4")


@pytest.mark.parametrize(
    "T",
    [
        fan(4),
        fan(5),
        pytest.param(fan(6), marks=pytest.mark.slow),
        star(4),
        pytest.param(star(5), marks=pytest.mark.slow),
    ],
    ids=["fan4", "fan5", "fan6", "star4", "star5"],
)
def test_ideal_variants_agree(T):
    report = variant_agreement(T, 12)
    assert report.primary.passed, str(report.primary)


def test_pentagon_orbit():
    report = orbit_check(fan(5), 8)
    assert report.size == 5
    assert len(report.profiles) == 4
    assert len(report.witnesses) == 5
    assert report.passed, report.summary()
    assert report.summary() == "5 triangulations, all profiles equal, all witnesses verified"


@pytest.mark.slow
def test_hexagon_orbit():
    report = orbit_check(fan(6), 12)
    assert report.size == 14
    assert len(report.witnesses) == 21
    assert report.passed, report.summary()


@pytest.mark.slow
def test_punctured_square_orbit():
    report = orbit_check(star(4), 10)
    assert report.passed, report.summary()


def test_annulus_presentation(fixture_path):
    presentation = load_presentation(fixture_path("annulus_presentation.json"))
    checks = check_presentation(presentation, N=12)
    assert len(checks) == 8
    assert all(c.checked and c.passed for c in checks), [c.to_json() for c in checks]


def test_relations_beyond_the_bound_are_unchecked(fixture_path):
    presentation = load_presentation(fixture_path("annulus_presentation.json"))
    checks = {c.name: c for c in check_presentation(presentation, N=4)}
    assert not checks["xx=rybarybart"].checked
    assert not checks["xx=rybarybart"].passed


@pytest.mark.slow
def test_torus_presentation(fixture_path, torus):
    presentation = load_presentation(fixture_path("torus_presentation.json"))
    assert presentation.qp().quiver == torus.quiver
    checks = check_presentation(presentation, N=14)
    assert len(checks) == 9
    assert all(c.passed for c in checks), [c.to_json() for c in checks]


def test_malformed_presentation(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"generators": {"x": ["a"]}}))
    with pytest.raises(BoundaryError):
        load_presentation(str(path))


def test_unknown_generator(fixture_path, square_qp, tmp_path):
    path = tmp_path / "pres.json"
    path.write_text(
        json.dumps(
            {
                "source": {"qp": fixture_path("square_qp.json")},
                "generators": {"b": ["b"]},
                "relations": [{"lhs": "b.q", "rhs": "0"}],
            }
        )
    )
    with pytest.raises(BoundaryError):
        check_presentation(load_presentation(str(path)), square_qp, N=6)


def test_presentation_residue(square_qp, tmp_path):
    path = tmp_path / "pres.json"
    path.write_text(
        json.dumps(
            {
                "generators": {"a": ["a"], "bc": ["b", "c"], "b": ["b"]},
                "relations": [
                    {"name": "abc", "lhs": "a.bc", "rhs": "0"},
                    {"name": "b", "lhs": "b", "rhs": "0"},
                ],
            }
        )
    )
    checks = check_presentation(load_presentation(str(path)), square_qp, N=6)
    assert [c.passed for c in checks] == [True, False]
    assert checks[1].residue == "b"
