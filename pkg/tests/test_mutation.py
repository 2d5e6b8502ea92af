import pytest

from boundary_qp.algebra import IceQP, Potential, path_weight
from boundary_qp.constructions.polygons import fan, star
from boundary_qp.mutation import (
    FrozenVertexError,
    LoopError,
    TwoCycleError,
    mutate,
    premutate,
    reduce,
)
from boundary_qp.quiver import Quiver, arrow_bijection
from boundary_qp.surface import Triangulation, build_ice_qp, flip, new_arc


def ends(qp: IceQP):
    return {a.id: (a.src, a.tgt) for a in qp.quiver.arrows}


def test_mutation_at_a_vertex_of_the_square(square_qp_unfrozen):
    mutated, report = mutate(square_qp_unfrozen, "3")
    assert ends(mutated) == {
        "a": ("1", "2"),
        "d": ("4", "1"),
        "b*": ("3", "2"),
        "c*": ("4", "3"),
        "[b.c]": ("2", "4"),
    }
    expected: Potential = Potential.from_cycles(
        mutated.quiver, [(1, ("a", "[b.c]", "d")), (1, ("[b.c]", "c*", "b*"))]
    )
    assert mutated.potential == expected
    assert report.added_composite_arrows == [("[b.c]", "b", "c")]
    assert sorted(report.reversed_arrows) == [("b", "b*"), ("c", "c*")]
    assert report.removed_trivial_pairs == []


def test_mutating_twice_restores_the_quiver(square_qp_unfrozen):
    once, _ = mutate(square_qp_unfrozen, "3")
    twice, report = mutate(once, "3")
    assert twice.quiver.is_isomorphic(square_qp_unfrozen.quiver)
    assert len(report.removed_trivial_pairs) == 1
    assert len(twice.potential) == 1
    assert twice.potential.arrows_used() == {"a", "d", "b**", "c**"}


def test_frozen_vertices_cannot_be_mutated(square_qp):
    with pytest.raises(FrozenVertexError):
        mutate(square_qp, "2")


def test_two_cycles_block_mutation():
    quiver: Quiver = Quiver.from_edges(
        ["1", "2", "3"], [("a", "1", "2"), ("b", "2", "1"), ("c", "2", "3")]
    )
    qp: IceQP = IceQP(quiver, Potential(quiver, {}))
    with pytest.raises(TwoCycleError):
        premutate(qp, "2")


def test_loops_block_mutation(torus):
    with pytest.raises(LoopError):
        premutate(torus, "R")


def test_reduction_removes_trivial_pairs():
    quiver: Quiver = Quiver.from_edges(
        ["1", "2", "3"],
        [("a", "1", "2"), ("b", "2", "1"), ("c", "2", "3"), ("d", "3", "1")],
    )
    qp: IceQP = IceQP(
        quiver, Potential.from_cycles(quiver, [(1, ("a", "b")), (1, ("a", "c", "d"))])
    )
    reduced, report = reduce(qp)
    assert report.removed_trivial_pairs == [("a", "b")]
    assert {a.id for a in reduced.quiver.arrows} == {"c", "d"}
    assert len(reduced.potential) == 0
    assert [arrow for arrow, _ in report.substitutions] == ["b"]


def test_reduction_keeps_frozen_pairs():
    quiver: Quiver = Quiver.from_edges(
        ["1", "2"], [("a", "1", "2"), ("b", "2", "1")], frozen=["1", "2"]
    )
    qp: IceQP = IceQP(quiver, Potential.from_cycles(quiver, [(1, ("a", "b"))]))
    reduced, report = reduce(qp)
    assert report.removed_trivial_pairs == []
    assert reduced.potential == qp.potential


@pytest.mark.parametrize("T", [fan(7), star(4)], ids=["heptagon", "punctured-square"])
def test_mutation_agrees_with_the_flip(T):
    qp: IceQP = build_ice_qp(T)
    for arc in [e.id for e in T.arcs]:
        mutated, _ = mutate(qp, arc)
        T2: Triangulation = flip(T, arc)
        flipped: IceQP = build_ice_qp(T2)
        renamed = {arc: new_arc(T, T2, arc)}
        assert arrow_bijection(mutated.quiver, flipped.quiver, renamed) is not None, arc
        assert mutated.potential.degree2_terms() == []
        for arrow in mutated.quiver.arrows:
            derivative = mutated.potential.cyclic_derivative(arrow.id)
            assert all(len(p) >= 2 for p in derivative.terms), arrow.id


def test_heptagon_mutation_at_d1_4():
    T: Triangulation = fan(7)
    mutated, report = mutate(build_ice_qp(T), "d1_4")
    T2: Triangulation = flip(T, "d1_4")
    assert new_arc(T, T2, "d1_4") == "d3_5"
    flipped: IceQP = build_ice_qp(T2)
    assert arrow_bijection(mutated.quiver, flipped.quiver, {"d1_4": "d3_5"}) is not None
    assert len(report.added_composite_arrows) == 4
    assert len(report.removed_trivial_pairs) == 2
    assert len(mutated.potential) == len(flipped.potential)


@pytest.mark.parametrize("T", [fan(7), star(4)], ids=["heptagon", "punctured-square"])
def test_mutating_back_restores_the_surface_quiver(T):
    qp: IceQP = build_ice_qp(T)
    for arc in [e.id for e in T.arcs]:
        once, _ = mutate(qp, arc)
        twice, _ = mutate(once, arc)
        assert twice.quiver.is_isomorphic(qp.quiver), arc


def test_mutation_carries_the_grading():
    qp: IceQP = build_ice_qp(fan(5))
    mutated, report = mutate(qp, "d1_3")
    assert mutated.weights
    degrees = {path_weight(p.arrows, mutated.weights) for p, _ in mutated.potential}
    assert degrees == {5}
    for arrow in mutated.quiver.arrows:
        if arrow.id in qp.quiver.arrow_map and "d1_3" not in (arrow.src, arrow.tgt):
            assert mutated.weights[arrow.id] == qp.weights[arrow.id]
    for name, alpha, beta in report.added_composite_arrows:
        if name in mutated.quiver.arrow_map:
            assert mutated.weights[name] == qp.weights[alpha] + qp.weights[beta]


def test_ungraded_mutation_stays_ungraded(square_qp_unfrozen):
    mutated, _ = mutate(square_qp_unfrozen, "3")
    assert dict(mutated.weights) == {}
