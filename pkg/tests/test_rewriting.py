import itertools
import random
from fractions import Fraction
from typing import Dict, List, Tuple

import pytest
from sympy import Matrix, Rational

from boundary_qp.algebra import AlgebraElement, IceQP
from boundary_qp.constructions.annulus import annulus_11
from boundary_qp.constructions.polygons import fan, star
from boundary_qp.quiver import Quiver, UnknownArrow
from boundary_qp.rewriting import (
    BoundExceeded,
    MonomialOrder,
    Relation,
    RewriteSystem,
    UnorientableRelation,
    UnsaturatedSystem,
    check_confluence,
    complete,
    expand_derivation,
    frozen_relations,
    graded_dimensions,
    graded_table,
    jacobian_system,
    normal_basis,
    normal_form,
    rule_element,
)
from boundary_qp.surface import Triangulation, build_ice_qp, corner_path, external_id


LOOPS: Quiver = Quiver.from_edges(["v"], [("x", "v", "v"), ("y", "v", "v")])
UNIT: MonomialOrder = MonomialOrder({"x": 1, "y": 1}, {"x": 0, "y": 1})


def loop_relation(*items) -> Relation:
    return Relation(AlgebraElement.from_words(LOOPS, items))


def loop_element(*items) -> AlgebraElement:
    return AlgebraElement.from_words(LOOPS, items)


def test_square_relations(square_qp):
    relations: List[Relation] = frozen_relations(square_qp)
    assert [r.name for r in relations] == ["da", "dc", "dd"]
    words = {r.name: [p.arrows for p, _ in r.element] for r in relations}
    assert words == {
        "da": [("b", "c", "d")],
        "dc": [("d", "a", "b")],
        "dd": [("a", "b", "c")],
    }


def test_square_boundary_algebra(square_qp):
    rs: RewriteSystem = jacobian_system(square_qp, 6)
    assert rs.saturated and rs.confluent_up_to == 6
    assert graded_dimensions(rs, "2", "3", 6) == [0, 1, 0, 0, 0, 0, 0]
    assert graded_dimensions(rs, "3", "2", 6) == [0, 0, 0, 1, 0, 0, 0]
    assert graded_dimensions(rs, "2", "2", 6) == [1, 0, 0, 0, 0, 0, 0]
    assert normal_basis(rs, "1", "2", 6) == [("a",)]
    assert normal_basis(rs, "1", "4", 6) == []
    assert normal_basis(rs, "4", "4", 6) == [()]
    abc = AlgebraElement.from_words(square_qp.quiver, [(1, ("a", "b", "c"))])
    assert normal_form(abc, rs).is_zero


def test_commuting_loops():
    rs: RewriteSystem = complete([loop_relation((1, ("x", "y")), (-1, ("y", "x")))], UNIT, 4)
    assert [r.lhs for r in rs.rules] == [("y", "x")]
    assert normal_form(loop_element((1, ("y", "x", "x"))), rs) == loop_element(
        (1, ("x", "x", "y"))
    )
    assert graded_dimensions(rs, "v", "v", 4) == [1, 2, 3, 4, 5]
    assert check_confluence(rs) == []


def test_weights_change_the_leading_term():
    order: MonomialOrder = MonomialOrder({"x": 1, "y": 3}, {"x": 0, "y": 1})
    rs: RewriteSystem = complete([loop_relation((1, ("x", "x", "x")), (-1, ("y",)))], order, 6)
    assert [r.lhs for r in rs.rules] == [("y",)]
    assert graded_dimensions(rs, "v", "v", 6) == [1, 1, 1, 1, 1, 1, 1]


def test_relation_beyond_the_bound(square_qp):
    with pytest.raises(BoundExceeded) as info:
        jacobian_system(square_qp, 2)
    assert info.value.degree == 3


def test_queries_beyond_the_certificate(square_qp):
    rs: RewriteSystem = jacobian_system(square_qp, 4)
    with pytest.raises(UnsaturatedSystem):
        graded_table(rs, ["2"], ["3"], 6)
    long = AlgebraElement.from_words(square_qp.quiver, [(1, ("a", "b", "c", "d", "a"))])
    with pytest.raises(UnsaturatedSystem):
        normal_form(long, rs)


def test_order_configuration_errors(square_qp):
    with pytest.raises(UnorientableRelation):
        MonomialOrder({"x": 1}, {"x": 0, "y": 0})
    with pytest.raises(UnknownArrow):
        MonomialOrder.for_qp(square_qp, {"zz": 2})


def test_trivial_leading_term_is_rejected():
    order: MonomialOrder = MonomialOrder({"x": 1, "y": 1}, {"x": 0, "y": 1})
    relation = Relation(
        AlgebraElement.from_words(LOOPS, [(1, ())], source="v"), None, "unit"
    )
    with pytest.raises(UnorientableRelation):
        complete([relation], order, 3)


def random_relations(rng: random.Random, count: int) -> List[Relation]:
    relations: List[Relation] = []
    for index in range(count):
        length: int = rng.choice((2, 3))
        words = rng.sample(list(itertools.product("xy", repeat=length)), rng.choice((2, 3)))
        coeffs = [rng.choice((1, -1, 2, Fraction(1, 2))) for _ in words]
        element = AlgebraElement.from_words(LOOPS, list(zip(coeffs, words)))
        relations.append(Relation(element, None, f"r{index}"))
    return relations


def ideal_dimension(relations: List[Relation], degree: int) -> int:
    """Rank of the span of u.r.v at one degree, by plain linear algebra"""
    basis: Dict[Tuple[str, ...], int] = {
        w: i for i, w in enumerate(itertools.product("xy", repeat=degree))
    }
    rows: List[List[Rational]] = []
    for relation in relations:
        length: int = len(next(iter(relation.element.terms)))
        free: int = degree - length
        if free < 0:
            continue
        for cut in range(free + 1):
            for u in itertools.product("xy", repeat=cut):
                for v in itertools.product("xy", repeat=free - cut):
                    row: List[Rational] = [Rational(0)] * len(basis)
                    for path, c in relation.element.terms.items():
                        row[basis[u + path.arrows + v]] += Rational(c.numerator, c.denominator)
                    rows.append(row)
    return Matrix(rows).rank() if rows else 0


@pytest.mark.parametrize("seed", range(20))
def test_completion_against_linear_algebra(seed):
    rng: random.Random = random.Random(seed)
    relations: List[Relation] = random_relations(rng, rng.choice((1, 2)))
    N: int = 5
    rs: RewriteSystem = complete(relations, UNIT, N, track_derivations=True)
    dims: List[int] = graded_dimensions(rs, "v", "v", N)
    for d in range(N + 1):
        assert dims[d] == 2 ** d - ideal_dimension(relations, d)
    assert check_confluence(rs) == []
    for rule in rs.rules:
        assert expand_derivation(rs, rule.derivation) == rule_element(rs, rule)
    for _ in range(5):
        length: int = rng.randint(1, N)
        x = loop_element(
            *[(rng.choice((1, -1, 3)), tuple(rng.choice("xy") for _ in range(length)))]
        )
        once: AlgebraElement = normal_form(x, rs)
        assert normal_form(once, rs) == once


def surface_element(qp: IceQP, *items) -> AlgebraElement:
    return AlgebraElement.from_words(qp.quiver, items)


def boundary_words(T: Triangulation) -> Tuple[Dict[int, tuple], Dict[int, tuple]]:
    points: List[str] = list(T.boundary_points[0])
    x = {int(p): corner_path(T, p) for p in points}
    y = {int(p): (external_id(p),) for p in points}
    return x, y


@pytest.mark.parametrize(
    "n",
    [1, 2, pytest.param(3, marks=pytest.mark.slow), pytest.param(4, marks=pytest.mark.slow)],
)
def test_fan_boundary_identities(n):
    m: int = n + 3
    T: Triangulation = fan(m)
    qp: IceQP = build_ice_qp(T)
    rs: RewriteSystem = jacobian_system(qp, 16)
    x, y = boundary_words(T)
    at = lambda k: (k - 1) % m + 1  # noqa: E731
    for k in range(1, m + 1):
        commute = surface_element(
            qp, (1, x[k] + y[k]), (-1, y[at(k + 1)] + x[at(k + 1)])
        )
        assert normal_form(commute, rs).is_zero
        around: Tuple[str, ...] = sum((y[at(k + 1 + j)] for j in range(1, n + 2)), ())
        square = surface_element(qp, (1, x[at(k + 1)] + x[k]), (-1, around))
        assert normal_form(square, rs).is_zero


@pytest.mark.parametrize("n", [1, pytest.param(2, marks=pytest.mark.slow)])
def test_star_boundary_identities(n):
    m: int = n + 3
    T: Triangulation = star(m)
    qp: IceQP = build_ice_qp(T)
    rs: RewriteSystem = jacobian_system(qp, 16)
    x, y = boundary_words(T)
    at = lambda k: (k - 1) % m + 1  # noqa: E731
    # x[k] = u.v passes through the spoke at k; a[k] turns from that spoke to the next
    spoke = lambda k: qp.quiver.arrow(x[at(k)][0]).tgt  # noqa: E731
    a = {k: qp.quiver.arrows_between(spoke(k), spoke(k + 1))[0].id for k in range(1, m + 1)}
    for k in range(1, m + 1):
        commute = surface_element(
            qp, (1, x[k] + y[k]), (-1, y[at(k + 1)] + x[at(k + 1)])
        )
        assert normal_form(commute, rs).is_zero
        around: Tuple[str, ...] = sum((y[at(k + j)] for j in range(1, n + 3)), ())
        square = surface_element(
            qp, (1, x[at(k + 1)] + x[k]), (-1, x[at(k + 1)] + around)
        )
        assert normal_form(square, rs).is_zero
        for turns in range(1, 5):
            spin: Tuple[str, ...] = tuple(a[at(k + i)] for i in range(turns))
            pushed: Tuple[str, ...] = sum((y[at(k + i)] for i in range(1, turns + 1)), ())
            through = surface_element(
                qp,
                (1, (x[k][0],) + spin + (x[at(k + turns)][1],)),
                (-1, pushed + x[at(k + turns)]),
            )
            assert normal_form(through, rs).is_zero, (k, turns)


KRONECKER: Quiver = Quiver.from_edges(
    ["1", "2"], [("a", "1", "2"), ("b", "1", "2"), ("c", "2", "1"), ("d", "2", "1")]
)
TWO_ROUTES: Quiver = Quiver.from_edges(
    ["1", "2", "3", "4"],
    [
        ("a", "1", "2"),
        ("b", "2", "4"),
        ("c", "1", "3"),
        ("d", "3", "4"),
        ("e", "4", "1"),
        ("f", "4", "1"),
    ],
)
DOUBLED_TRIANGLE: Quiver = Quiver.from_edges(
    ["1", "2", "3"], [("a", "1", "2"), ("b", "1", "2"), ("c", "2", "3"), ("d", "3", "1")]
)


def paths_of_length(quiver: Quiver, length: int) -> List[Tuple[str, str, Tuple[str, ...]]]:
    """``(source, target, word)`` for every path with ``length`` arrows"""
    found: List[Tuple[str, str, Tuple[str, ...]]] = [(v, v, ()) for v in quiver.vertices]
    for _ in range(length):
        found = [
            (source, arrow.tgt, word + (arrow.id,))
            for source, end, word in found
            for arrow in quiver.outgoing(end)
        ]
    return found


def random_parallel_relations(
    rng: random.Random, quiver: Quiver, count: int
) -> List[Relation]:
    groups: Dict[Tuple[str, str, int], List[Tuple[str, ...]]] = {}
    for length in (2, 3):
        for source, target, word in paths_of_length(quiver, length):
            groups.setdefault((source, target, length), []).append(word)
    parallel = sorted(key for key, words in groups.items() if len(words) > 1)
    relations: List[Relation] = []
    for index in range(count):
        words = groups[rng.choice(parallel)]
        chosen = rng.sample(words, min(len(words), rng.choice((2, 3))))
        coeffs = [rng.choice((1, -1, 2, Fraction(1, 2))) for _ in chosen]
        element = AlgebraElement.from_words(quiver, list(zip(coeffs, chosen)))
        relations.append(Relation(element, None, f"r{index}"))
    return relations


def quotient_dimension(quiver: Quiver, relations: List[Relation], degree: int) -> int:
    """Paths of one length minus the rank of every p.r.q of that length"""
    columns: Dict[Tuple[str, ...], int] = {
        word: i for i, (_, _, word) in enumerate(paths_of_length(quiver, degree))
    }
    rows: List[List[Rational]] = []
    for relation in relations:
        source, target = relation.endpoints
        length: int = len(next(iter(relation.element.terms)))
        free: int = degree - length
        for cut in range(free + 1):
            before = [w for _, end, w in paths_of_length(quiver, cut) if end == source]
            after = [w for start, _, w in paths_of_length(quiver, free - cut) if start == target]
            for p in before:
                for q in after:
                    row: List[Rational] = [Rational(0)] * len(columns)
                    for path, c in relation.element.terms.items():
                        row[columns[p + path.arrows + q]] += Rational(c.numerator, c.denominator)
                    rows.append(row)
    rank: int = Matrix(rows).rank() if rows else 0
    return len(columns) - rank


@pytest.mark.parametrize("quiver", [LOOPS, KRONECKER, TWO_ROUTES, DOUBLED_TRIANGLE])
@pytest.mark.parametrize("seed", range(6))
def test_quotient_dimensions_against_linear_algebra(quiver, seed):
    rng: random.Random = random.Random(seed)
    relations: List[Relation] = random_parallel_relations(rng, quiver, rng.choice((1, 2, 3)))
    order: MonomialOrder = MonomialOrder(
        {a.id: 1 for a in quiver.arrows}, {a.id: i for i, a in enumerate(quiver.arrows)}
    )
    N: int = 5
    rs: RewriteSystem = complete(relations, order, N, quiver=quiver)
    assert check_confluence(rs) == []
    table = graded_table(rs, quiver.vertices, quiver.vertices, N)
    for d in range(N + 1):
        counted: int = sum(table[i][j][d] for i in quiver.vertices for j in quiver.vertices)
        assert counted == quotient_dimension(quiver, relations, d), d


def random_element(rng: random.Random, rs: RewriteSystem) -> AlgebraElement:
    quiver: Quiver = rs.quiver
    items = []
    for _ in range(rng.randint(1, 3)):
        end: str = rng.choice([a.src for a in quiver.arrows])
        word: List[str] = []
        degree: int = 0
        for _ in range(rng.randint(1, rs.confluent_up_to)):
            steps = [
                a for a in quiver.outgoing(end) if degree + rs.order.weight(a.id) <= rs.confluent_up_to
            ]
            if not steps:
                break
            arrow = rng.choice(steps)
            word.append(arrow.id)
            degree += rs.order.weight(arrow.id)
            end = arrow.tgt
        items.append((rng.choice((1, -1, 2, Fraction(-1, 3))), tuple(word)))
    return AlgebraElement.from_words(quiver, items)


@pytest.mark.parametrize("surface", ["square", "fan5", "star4", "annulus"])
def test_normal_form_is_idempotent(surface, square_qp):
    qp: IceQP = {
        "square": lambda: square_qp,
        "fan5": lambda: build_ice_qp(fan(5)),
        "star4": lambda: build_ice_qp(star(4)),
        "annulus": lambda: build_ice_qp(annulus_11()),
    }[surface]()
    rs: RewriteSystem = jacobian_system(qp, 8)
    rng: random.Random = random.Random(surface)
    for _ in range(100):
        x: AlgebraElement = random_element(rng, rs)
        once: AlgebraElement = normal_form(x, rs)
        assert normal_form(once, rs) == once, x
