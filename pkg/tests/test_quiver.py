import pytest

from boundary_qp.quiver import (
    CompositionMismatch,
    Path,
    Quiver,
    UnknownArrow,
    UnknownVertex,
    arrow_bijection,
    has_two_cycle_at,
    validate,
)


@pytest.fixture
def square() -> Quiver:
    return Quiver.from_edges(
        ["1", "2", "3", "4"],
        [("a", "1", "2"), ("b", "2", "3"), ("c", "3", "4"), ("d", "4", "1")],
        frozen=["2", "3"],
    )


def test_path_composes_left_to_right(square):
    p: Path = square.path(("a", "b"))
    assert (p.source, p.target) == ("1", "3")
    q: Path = p * square.path(("c",))
    assert q.arrows == ("a", "b", "c")
    assert str(q) == "a.b.c"


def test_path_rejects_non_composable_arrows(square):
    with pytest.raises(CompositionMismatch):
        square.path(("a", "c"))
    with pytest.raises(CompositionMismatch):
        square.path(("a",)) * square.path(("c",))


def test_trivial_path_needs_a_vertex(square):
    e: Path = square.path((), source="2")
    assert e.is_trivial and not e.is_cycle
    assert str(e) == "e_2"
    with pytest.raises(CompositionMismatch):
        square.path(())
    with pytest.raises(UnknownVertex):
        square.path((), source="9")


def test_unknown_arrow(square):
    with pytest.raises(UnknownArrow):
        square.path(("z",))


def test_path_through_vertices(square):
    assert square.path_through(["1", "2", "3"]).arrows == ("a", "b")


def test_clean_quiver_has_no_diagnostics(square):
    assert validate(square) == []
    assert not has_two_cycle_at(square, "1")


def test_diagnostics_report_loops_and_two_cycles():
    q: Quiver = Quiver.from_edges(
        ["1", "2"], [("a", "1", "2"), ("b", "2", "1"), ("l", "1", "1"), ("z", "2", "3")]
    )
    kinds = {d.kind for d in validate(q)}
    assert kinds == {"two-cycle", "loop", "dangling-arrow"}
    assert has_two_cycle_at(q, "1")


def test_isomorphism_respects_frozen_vertices(square):
    renamed: Quiver = Quiver.from_edges(
        ["p", "q", "r", "s"],
        [("w", "r", "s"), ("x", "s", "p"), ("y", "p", "q"), ("z", "q", "r")],
        frozen=["q", "r"],
    )
    assert square.is_isomorphic(renamed)
    shifted: Quiver = Quiver(renamed.vertices, renamed.arrows, frozenset({"q"}))
    assert not square.is_isomorphic(shifted)


def test_arrow_bijection_matches_endpoints(square):
    other: Quiver = Quiver.from_edges(
        ["1", "2", "3", "4"],
        [("d2", "4", "1"), ("c2", "3", "4"), ("b2", "2", "3"), ("a2", "1", "2")],
        frozen=["2", "3"],
    )
    assert arrow_bijection(square, other) == {"a": "a2", "b": "b2", "c": "c2", "d": "d2"}
    assert arrow_bijection(square, other.without_arrows(["d2"])) is None


def test_precedence_reorders_arrows(square):
    reordered: Quiver = square.with_precedence(["c", "a"])
    assert [a.id for a in reordered.arrows] == ["c", "a", "b", "d"]
    with pytest.raises(UnknownArrow):
        square.with_precedence(["nope"])


def test_json_document(square):
    assert Quiver.from_json(square.to_json()) == square


def test_dot_marks_frozen_vertices(square):
    dot: str = square.to_dot("sq")
    assert dot.startswith('digraph "sq"')
    assert '"2" [shape=box];' in dot
    assert '"1" [shape=ellipse];' in dot
    assert '"4" -> "1" [label="d"];' in dot
