import heapq
import logging
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import (
    TypedDict,
    Tuple,
    List,
    Dict,
    Optional,
    Mapping,
    Sequence,
    Iterator,
    Iterable,
    DefaultDict,
    Any,
)

from .algebra import AlgebraElement, IceQP, Terms
from .quiver import Quiver, Path, UnknownArrow
from .utils import DEFAULT_DEGREE, Word, fmt_elapsed, fmt_rational


__all__ = [
    "RewriteError",
    "BoundExceeded",
    "UnorientableRelation",
    "UnsaturatedSystem",
    "Relation",
    "MonomialOrder",
    "Rule",
    "RewriteSystem",
    "frozen_relations",
    "complete",
    "normal_form",
    "expand_derivation",
    "check_confluence",
    "irreducible_paths",
    "normal_basis",
    "graded_dimensions",
    "graded_table",
    "jacobian_system",
]


logger: logging.Logger = logging.getLogger(__name__)


DEFAULT_MAX_RULES: int = 5_000

Poly = Dict[Word, Fraction]
DerivationKey = Tuple[Word, int, Word]
Derivation = Dict[DerivationKey, Fraction]
OrderKey = Tuple[int, Tuple[int, ...]]


class RewriteError(Exception):
    ...


class BoundExceeded(RewriteError):
    """Completion stopped early; ``system`` is the partial, unsaturated result"""

    def __init__(self, message: str, system: "RewriteSystem", degree: int):
        super().__init__(message)
        self.system: RewriteSystem = system
        self.degree: int = degree


class UnorientableRelation(RewriteError):
    ...


class UnsaturatedSystem(RewriteError):
    ...


class TermJSON(TypedDict):
    coeff: str
    path: List[str]


class DerivationJSON(TypedDict):
    left: List[str]
    relation: int
    right: List[str]
    coeff: str


class RuleDocument(TypedDict):
    id: int
    lhs: List[str]
    source: str
    target: str
    rhs: List[TermJSON]
    origin: str
    derivation: Optional[List[DerivationJSON]]


class RelationDocument(TypedDict):
    name: str
    arrow: Optional[str]
    terms: List[Dict[str, Any]]


class OrderDocument(TypedDict):
    weights: Dict[str, int]
    precedence: List[str]


class RewriteSystemDocument(TypedDict):
    degree_bound: int
    confluent_up_to: int
    saturated: bool
    order: OrderDocument
    relations: List[RelationDocument]
    rules: List[RuleDocument]


def _accumulate(target: Dict[Any, Fraction], key: Any, coeff: Fraction) -> None:
    total: Fraction = target.get(key, Fraction(0)) + coeff
    if total:
        target[key] = total
    else:
        target.pop(key, None)


def _contains(word: Word, sub: Word) -> bool:
    n: int = len(sub)
    return any(word[i : i + n] == sub for i in range(len(word) - n + 1))


def _overlaps(a: Word, b: Word) -> Iterator[int]:
    """Lengths ``k`` of proper overlaps where the last ``k`` letters of ``a`` start ``b``"""
    for k in range(1, min(len(a), len(b))):
        if a[-k:] == b[:k]:
            yield k


def _poly_terms(poly: Mapping[Word, Fraction]) -> List[TermJSON]:
    return [TermJSON(coeff=fmt_rational(c), path=list(w)) for w, c in sorted(poly.items())]


@dataclass(frozen=True)
class Relation:
    element: AlgebraElement
    arrow: Optional[str] = None
    name: str = ""

    @property
    def endpoints(self) -> Tuple[str, str]:
        ends = self.element.endpoints()
        if len(ends) != 1:
            raise RewriteError(
                f"Relation {self.name or self.element} mixes paths with different endpoints"
            )
        return next(iter(ends))

    def __str__(self) -> str:
        return f"{self.name}: {self.element}" if self.name else str(self.element)

    def to_json(self) -> RelationDocument:
        return RelationDocument(
            name=self.name, arrow=self.arrow, terms=list(self.element.to_json())  # type: ignore
        )


def frozen_relations(qp: IceQP, variant: Optional[str] = None) -> List[Relation]:
    """Cyclic derivatives of the potential along the differentiable arrows, zeros dropped"""
    relations: List[Relation] = []
    for arrow_id in qp.differentiable(variant):
        element: AlgebraElement = qp.potential.cyclic_derivative(arrow_id)
        if element.is_zero:
            continue
        relations.append(Relation(element, arrow_id, f"d{arrow_id}"))
    return relations


@dataclass(frozen=True)
class MonomialOrder:
    """Weighted degree first, then left-lexicographic by arrow precedence"""

    weights: Mapping[str, int]
    precedence: Mapping[str, int]
    _keys: Dict[Word, OrderKey] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if len(set(self.precedence.values())) != len(self.precedence):
            raise UnorientableRelation("Arrow precedence has ties")
        bad: List[str] = [a for a, w in self.weights.items() if int(w) < 1]
        if bad:
            raise RewriteError(f"Arrow weights must be positive integers: {bad}")

    @classmethod
    def for_qp(
        cls,
        qp: IceQP,
        weights: Optional[Mapping[str, int]] = None,
        precedence: Optional[Sequence[str]] = None,
    ) -> "MonomialOrder":
        quiver: Quiver = qp.quiver
        unknown: List[str] = sorted(
            (set(weights or {}) | set(precedence or ())) - set(quiver.arrow_map)
        )
        if unknown:
            raise UnknownArrow(f"Order configuration names unknown arrows: {unknown}")
        merged: Dict[str, int] = {**qp.weights, **(weights or {})}
        listed: List[str] = list(precedence or ())
        listed += sorted(
            (a.id for a in quiver.arrows if a.id not in listed),
            key=lambda a: quiver.precedence[a],
        )
        return cls(
            {a.id: int(merged.get(a.id, 1)) for a in quiver.arrows},
            {a: i for i, a in enumerate(listed)},
        )

    def weight(self, arrow_id: str) -> int:
        return self.weights.get(arrow_id, 1)

    def degree(self, word: Word) -> int:
        return sum(self.weight(a) for a in word)

    def key(self, word: Word) -> OrderKey:
        cached: Optional[OrderKey] = self._keys.get(word)
        if cached is None:
            try:
                cached = (self.degree(word), tuple(self.precedence[a] for a in word))
            except KeyError as exc:
                raise UnorientableRelation(f"Arrow {exc.args[0]} has no precedence") from exc
            self._keys[word] = cached
        return cached

    def leading(self, words: Iterable[Word]) -> Word:
        return max(words, key=self.key)

    def to_json(self) -> OrderDocument:
        return OrderDocument(
            weights=dict(self.weights),
            precedence=sorted(self.precedence, key=lambda a: self.precedence[a]),
        )


@dataclass
class Rule:
    id: int
    lhs: Word
    source: str
    target: str
    rhs: Poly
    origin: str
    derivation: Optional[Derivation] = None

    def poly(self) -> Poly:
        poly: Poly = {w: -c for w, c in self.rhs.items()}
        poly[self.lhs] = Fraction(1)
        return poly

    def __str__(self) -> str:
        rhs: str = " + ".join(
            f"{fmt_rational(c)}*{'.'.join(w) or 'e'}" for w, c in sorted(self.rhs.items())
        )
        return f"{'.'.join(self.lhs)} -> {rhs or '0'}"

    def to_json(self) -> RuleDocument:
        derivation: Optional[List[DerivationJSON]] = None
        if self.derivation is not None:
            derivation = [
                DerivationJSON(left=list(u), relation=i, right=list(v), coeff=fmt_rational(c))
                for (u, i, v), c in sorted(self.derivation.items())
            ]
        return RuleDocument(
            id=self.id,
            lhs=list(self.lhs),
            source=self.source,
            target=self.target,
            rhs=_poly_terms(self.rhs),
            origin=self.origin,
            derivation=derivation,
        )


_Pair = Tuple[int, int, int, int, int]


@dataclass
class RewriteSystem:
    quiver: Quiver
    order: MonomialOrder
    degree_bound: int
    relations: List[Relation] = field(default_factory=list)
    confluent_up_to: int = -1
    saturated: bool = False
    track_derivations: bool = False
    _rules: Dict[int, Rule] = field(default_factory=dict, repr=False)
    _index: Dict[Word, Rule] = field(default_factory=dict, repr=False)
    _lengths: Counter = field(default_factory=Counter, repr=False)
    _next_id: int = field(default=0, repr=False)
    _seq: int = field(default=0, repr=False)

    @property
    def rules(self) -> List[Rule]:
        return sorted(self._rules.values(), key=lambda r: self.order.key(r.lhs))

    def __len__(self) -> int:
        return len(self._rules)

    def rule_for(self, lhs: Word) -> Optional[Rule]:
        return self._index.get(lhs)

    def _add(self, rule: Rule) -> None:
        self._rules[rule.id] = rule
        self._index[rule.lhs] = rule
        self._lengths[len(rule.lhs)] += 1

    def _remove(self, rule: Rule) -> None:
        del self._rules[rule.id]
        del self._index[rule.lhs]
        self._lengths[len(rule.lhs)] -= 1
        if not self._lengths[len(rule.lhs)]:
            del self._lengths[len(rule.lhs)]

    def _match(self, word: Word) -> Optional[Tuple[Rule, int]]:
        """Leftmost occurrence of a leading word, by earliest end"""
        lengths: List[int] = sorted(self._lengths)
        for end in range(1, len(word) + 1):
            for length in lengths:
                if length > end:
                    break
                rule: Optional[Rule] = self._index.get(word[end - length : end])
                if rule is not None:
                    return rule, end - length
        return None

    def _suffix_reducible(self, word: Word) -> bool:
        return any(
            length <= len(word) and word[len(word) - length :] in self._index
            for length in self._lengths
        )

    def is_irreducible(self, word: Word) -> bool:
        return self._match(word) is None

    def _reduce(
        self,
        poly: Mapping[Word, Fraction],
        derivation: Optional[Derivation] = None,
        keep: Optional[Word] = None,
    ) -> Tuple[Poly, Optional[Derivation]]:
        work: Poly = dict(poly)
        result: Poly = {}
        trace: Optional[Derivation] = dict(derivation) if derivation is not None else None
        while work:
            word: Word = max(work, key=self.order.key)
            coeff: Fraction = work.pop(word)
            found: Optional[Tuple[Rule, int]] = None if word == keep else self._match(word)
            if found is None:
                result[word] = coeff
                continue
            rule, start = found
            left: Word = word[:start]
            right: Word = word[start + len(rule.lhs) :]
            for w, c in rule.rhs.items():
                _accumulate(work, left + w + right, coeff * c)
            if trace is not None and rule.derivation is not None:
                for (u, i, v), c in rule.derivation.items():
                    _accumulate(trace, (left + u, i, v + right), -coeff * c)
        return result, trace

    def reduce_poly(self, poly: Mapping[Word, Fraction]) -> Poly:
        return self._reduce(poly)[0]

    def _push_overlaps(self, rule: Rule, heap: List[_Pair]) -> None:
        for other in list(self._rules.values()):
            pairs: List[Tuple[Rule, Rule]] = [(rule, other)]
            if other is not rule:
                pairs.append((other, rule))
            for first, second in pairs:
                for k in _overlaps(first.lhs, second.lhs):
                    degree: int = self.order.degree(first.lhs + second.lhs[k:])
                    if degree <= self.degree_bound:
                        self._seq += 1
                        heapq.heappush(heap, (degree, self._seq, first.id, second.id, k))

    def _insert(
        self,
        poly: Poly,
        source: str,
        target: str,
        derivation: Optional[Derivation],
        origin: str,
        heap: List[_Pair],
    ) -> None:
        queue: List[Tuple[Poly, str, str, Optional[Derivation], str]] = [
            (poly, source, target, derivation, origin)
        ]
        while queue:
            poly, source, target, derivation, origin = queue.pop(0)
            poly, derivation = self._reduce(poly, derivation)
            if not poly:
                continue
            lead: Word = self.order.leading(poly)
            if not lead:
                raise UnorientableRelation(
                    f"Relation {origin} has a trivial path as its leading term"
                )
            scale: Fraction = 1 / poly[lead]
            rule: Rule = Rule(
                self._next_id,
                lead,
                source,
                target,
                {w: -c * scale for w, c in poly.items() if w != lead},
                origin,
                {k: c * scale for k, c in derivation.items()} if derivation is not None else None,
            )
            self._next_id += 1
            for other in list(self._rules.values()):
                if _contains(other.lhs, lead):
                    self._remove(other)
                    queue.append(
                        (other.poly(), other.source, other.target, other.derivation, other.origin)
                    )
            self._add(rule)
            for other in list(self._rules.values()):
                if other is rule:
                    continue
                reduced, trace = self._reduce(other.poly(), other.derivation, keep=other.lhs)
                if reduced != other.poly():
                    other.rhs = {w: -c for w, c in reduced.items() if w != other.lhs}
                    other.derivation = trace
            self._push_overlaps(rule, heap)

    def _resolve(self, heap: List[_Pair], max_rules: int) -> None:
        while heap:
            degree, _, first_id, second_id, k = heapq.heappop(heap)
            first: Optional[Rule] = self._rules.get(first_id)
            second: Optional[Rule] = self._rules.get(second_id)
            if first is None or second is None:
                continue
            if len(self._rules) > max_rules:
                self.confluent_up_to = degree - 1
                self.saturated = False
                raise BoundExceeded(
                    f"Completion exceeded {max_rules} rules at overlap degree {degree}",
                    self,
                    degree,
                )
            u: Word = first.lhs[: len(first.lhs) - k]
            v: Word = second.lhs[k:]
            poly: Poly = {}
            for w, c in first.rhs.items():
                _accumulate(poly, w + v, c)
            for w, c in second.rhs.items():
                _accumulate(poly, u + w, -c)
            derivation: Optional[Derivation] = None
            if self.track_derivations:
                derivation = {}
                for (l, i, r), c in (second.derivation or {}).items():
                    _accumulate(derivation, (u + l, i, r), c)
                for (l, i, r), c in (first.derivation or {}).items():
                    _accumulate(derivation, (l, i, r + v), -c)
            self._insert(
                poly,
                first.source,
                second.target,
                derivation,
                f"overlap({first_id},{second_id})",
                heap,
            )
        self.confluent_up_to = self.degree_bound
        self.saturated = True

    def to_json(self) -> RewriteSystemDocument:
        return RewriteSystemDocument(
            degree_bound=self.degree_bound,
            confluent_up_to=self.confluent_up_to,
            saturated=self.saturated,
            order=self.order.to_json(),
            relations=[r.to_json() for r in self.relations],
            rules=[r.to_json() for r in self.rules],
        )


def complete(
    relations: Sequence[Relation],
    order: MonomialOrder,
    N: int = DEFAULT_DEGREE,
    track_derivations: bool = False,
    max_rules: int = DEFAULT_MAX_RULES,
    quiver: Optional[Quiver] = None,
) -> RewriteSystem:
    """
    Orient the relations and resolve every overlap of weighted degree <= N.
    Raises BoundExceeded (carrying the partial system) when a relation is
    beyond the bound or the rule count passes ``max_rules``.
    """
    if quiver is None:
        if not relations:
            raise RewriteError("Completing an empty relation list needs the quiver")
        quiver = relations[0].element.quiver
    started: float = time.monotonic()
    system: RewriteSystem = RewriteSystem(
        quiver, order, N, list(relations), track_derivations=track_derivations
    )
    heap: List[_Pair] = []
    for index, relation in enumerate(relations):
        source, target = relation.endpoints
        poly: Poly = {p.arrows: c for p, c in relation.element.terms.items()}
        degree: int = max(order.degree(w) for w in poly)
        if degree > N:
            raise BoundExceeded(
                f"Relation {relation.name or index} has degree {degree}, beyond {N}",
                system,
                degree,
            )
        derivation: Optional[Derivation] = (
            {((), index, ()): Fraction(1)} if track_derivations else None
        )
        system._insert(  # pylint: disable=protected-access
            poly, source, target, derivation, relation.name or f"r{index}", heap
        )
    system._resolve(heap, max_rules)  # pylint: disable=protected-access
    logger.debug(
        f"Completed {len(relations)} relations into {len(system)} rules up to degree {N} "
        f"in {fmt_elapsed(time.monotonic() - started)}"
    )
    return system


def _degree_of(element: AlgebraElement, rs: RewriteSystem) -> int:
    return max((rs.order.degree(p.arrows) for p in element.terms), default=-1)


def normal_form(x: AlgebraElement, rs: RewriteSystem) -> AlgebraElement:
    degree: int = _degree_of(x, rs)
    if degree > rs.confluent_up_to:
        raise UnsaturatedSystem(
            f"Element of degree {degree} is beyond the certified degree {rs.confluent_up_to}"
        )
    groups: DefaultDict[Tuple[str, str], Poly] = defaultdict(dict)
    for path, coeff in x.terms.items():
        groups[(path.source, path.target)][path.arrows] = coeff
    terms: Terms = {}
    for (source, target), poly in groups.items():
        for word, coeff in rs.reduce_poly(poly).items():
            terms[Path(source, target, word)] = coeff
    return AlgebraElement(x.quiver, terms, x.degree_bound, x.truncated)


def expand_derivation(
    rs: RewriteSystem, derivation: Mapping[DerivationKey, Fraction]
) -> AlgebraElement:
    """The ideal element ``sum c * u . relation_i . v`` a derivation trace stands for"""
    terms: Terms = {}
    for (u, index, v), coeff in derivation.items():
        for path, c in rs.relations[index].element.terms.items():
            word: Word = u + path.arrows + v
            source: str = rs.quiver.arrow(u[0]).src if u else path.source
            target: str = rs.quiver.arrow(v[-1]).tgt if v else path.target
            _accumulate(terms, Path(source, target, word), coeff * c)  # type: ignore
    return AlgebraElement(rs.quiver, terms)


def rule_element(rs: RewriteSystem, rule: Rule) -> AlgebraElement:
    return AlgebraElement(
        rs.quiver, {Path(rule.source, rule.target, w): c for w, c in rule.poly().items()}
    )


def check_confluence(rs: RewriteSystem) -> List[str]:
    """Recompute every overlap up to the certified degree; returns the failures"""
    failures: List[str] = []
    rules: List[Rule] = rs.rules
    for first in rules:
        for second in rules:
            if first is not second and _contains(second.lhs, first.lhs):
                failures.append(f"Rule {second.id} is not inter-reduced against {first.id}")
            for k in _overlaps(first.lhs, second.lhs):
                word: Word = first.lhs + second.lhs[k:]
                if rs.order.degree(word) > rs.confluent_up_to:
                    continue
                u: Word = first.lhs[: len(first.lhs) - k]
                v: Word = second.lhs[k:]
                poly: Poly = {}
                for w, c in first.rhs.items():
                    _accumulate(poly, w + v, c)
                for w, c in second.rhs.items():
                    _accumulate(poly, u + w, -c)
                left: Poly = rs.reduce_poly(poly)
                if left:
                    failures.append(
                        f"Overlap {'.'.join(word)} of rules {first.id} and {second.id} "
                        f"does not resolve"
                    )
    return failures


def irreducible_paths(rs: RewriteSystem, source: str, N: int) -> Iterator[Tuple[Word, str, int]]:
    """``(word, target, weighted degree)`` for every normal-form path from ``source`` up to N"""
    stack: List[Tuple[Word, str, int]] = [((), source, 0)]
    while stack:
        word, end, degree = stack.pop()
        yield word, end, degree
        for arrow in rs.quiver.outgoing(end):
            extended_degree: int = degree + rs.order.weight(arrow.id)
            if extended_degree > N:
                continue
            extended: Word = word + (arrow.id,)
            if rs._suffix_reducible(extended):  # pylint: disable=protected-access
                continue
            stack.append((extended, arrow.tgt, extended_degree))


def _check_saturated(rs: RewriteSystem, N: int) -> None:
    if rs.confluent_up_to < N:
        raise UnsaturatedSystem(
            f"System is certified up to degree {rs.confluent_up_to}, {N} requested"
        )


def normal_basis(rs: RewriteSystem, i: str, j: str, N: int) -> List[Word]:
    _check_saturated(rs, N)
    rs.quiver.check_vertex(i)
    rs.quiver.check_vertex(j)
    words: List[Word] = [w for w, end, _ in irreducible_paths(rs, i, N) if end == j]
    return sorted(words, key=rs.order.key)


def graded_dimensions(rs: RewriteSystem, i: str, j: str, N: int) -> List[int]:
    """Number of normal-form paths from ``i`` to ``j`` at each weighted degree 0..N"""
    return graded_table(rs, [i], [j], N)[i][j]


def graded_table(
    rs: RewriteSystem, sources: Sequence[str], targets: Sequence[str], N: int
) -> Dict[str, Dict[str, List[int]]]:
    _check_saturated(rs, N)
    table: Dict[str, Dict[str, List[int]]] = {}
    wanted = set(targets)
    for source in sources:
        rs.quiver.check_vertex(source)
        row: Dict[str, List[int]] = {t: [0] * (N + 1) for t in targets}
        for _, end, degree in irreducible_paths(rs, source, N):
            if end in wanted:
                row[end][degree] += 1
        table[source] = row
    return table


def jacobian_system(
    qp: IceQP,
    N: int = DEFAULT_DEGREE,
    variant: Optional[str] = None,
    order: Optional[MonomialOrder] = None,
    track_derivations: bool = False,
) -> RewriteSystem:
    relations: List[Relation] = frozen_relations(qp, variant)
    return complete(
        relations,
        order or MonomialOrder.for_qp(qp),
        N,
        track_derivations=track_derivations,
        quiver=qp.quiver,
    )
