import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import (
    TypedDict,
    Dict,
    Mapping,
    Tuple,
    List,
    Optional,
    Iterable,
    Union,
    Sequence,
    FrozenSet,
    Any,
    Iterator,
)

from .quiver import (
    Quiver,
    Path,
    QuiverError,
    UnknownArrow,
    QuiverDocument,
    Diagnostic,
    validate,
)
from .utils import Rational, Word, parse_rational, fmt_rational, load_json


__all__ = [
    "QuiverMismatch",
    "NotACycle",
    "AlgebraElement",
    "Potential",
    "IceQP",
    "multiply",
    "canonicalize_cycle",
    "cyclic_derivative",
    "cyclically_equivalent",
    "is_homogeneous",
    "load_qp",
    "NOT_BOTH_FROZEN",
    "EXCLUDE_Y_ONLY",
    "VARIANTS",
]


logger: logging.Logger = logging.getLogger(__name__)


NOT_BOTH_FROZEN: str = "not-both-frozen"
EXCLUDE_Y_ONLY: str = "exclude-Y-only"
VARIANTS: Tuple[str, ...] = (NOT_BOTH_FROZEN, EXCLUDE_Y_ONLY)


class QuiverMismatch(QuiverError):
    ...


class NotACycle(QuiverError):
    ...


Terms = Dict[Path, Fraction]
Scalar = Union[int, Fraction]


class TermDocument(TypedDict):
    coeff: str
    path: List[str]
    source: str


class CycleDocument(TypedDict):
    coeff: str
    cycle: List[str]


class IceQPDocument(TypedDict, total=False):
    quiver: QuiverDocument
    potential: List[CycleDocument]
    external: List[str]
    weights: Dict[str, int]
    boundary: List[List[str]]


def _path_key(quiver: Quiver, path: Path) -> Tuple[int, Tuple[int, ...], str]:
    prec: Dict[str, int] = quiver.precedence
    return len(path), tuple(prec.get(a, -1) for a in path.arrows), path.source


def _render_terms(quiver: Quiver, terms: Mapping[Path, Fraction]) -> str:
    if not terms:
        return "0"
    chunks: List[str] = []
    for path in sorted(terms, key=lambda p: _path_key(quiver, p)):
        coeff: Fraction = terms[path]
        sign: str = "-" if coeff < 0 else "+"
        magnitude: Fraction = abs(coeff)
        body: str = str(path) if magnitude == 1 else f"{fmt_rational(magnitude)}*{path}"
        chunks.append(f"{sign} {body}")
    text: str = " ".join(chunks)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _merge(terms: Dict[Path, Fraction], path: Path, coeff: Fraction) -> None:
    total: Fraction = terms.get(path, Fraction(0)) + coeff
    if total:
        terms[path] = total
    else:
        terms.pop(path, None)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """
    A finite linear combination of paths with exact rational coefficients,
    seen through a degree window: with ``degree_bound = N`` no stored path is
    longer than ``N`` and ``truncated`` tells whether anything was discarded.
    """

    quiver: Quiver
    terms: Mapping[Path, Fraction] = field(default_factory=dict)
    degree_bound: Optional[int] = None
    truncated: bool = False

    def __post_init__(self):
        cleaned: Terms = {}
        truncated: bool = self.truncated
        for path, coeff in self.terms.items():
            value: Fraction = parse_rational(coeff)
            if not value:
                continue
            if self.degree_bound is not None and len(path) > self.degree_bound:
                truncated = True
                continue
            _merge(cleaned, path, value)
        object.__setattr__(self, "terms", cleaned)
        object.__setattr__(self, "truncated", truncated)

    @classmethod
    def zero(cls, quiver: Quiver, degree_bound: Optional[int] = None) -> "AlgebraElement":
        return cls(quiver, {}, degree_bound)

    @classmethod
    def from_path(
        cls,
        quiver: Quiver,
        path: Path,
        coeff: Rational = 1,
        degree_bound: Optional[int] = None,
    ) -> "AlgebraElement":
        return cls(quiver, {path: parse_rational(coeff)}, degree_bound)

    @classmethod
    def from_words(
        cls,
        quiver: Quiver,
        items: Iterable[Tuple[Rational, Sequence[str]]],
        degree_bound: Optional[int] = None,
        source: Optional[str] = None,
    ) -> "AlgebraElement":
        """Build from ``(coefficient, arrow ids)`` pairs; empty words need ``source``"""
        terms: Terms = {}
        for coeff, word in items:
            _merge(terms, quiver.path(word, source=source), parse_rational(coeff))
        return cls(quiver, terms, degree_bound)

    def _check_same(self, other: "AlgebraElement") -> None:
        if other.quiver is not self.quiver and other.quiver != self.quiver:
            raise QuiverMismatch("Algebra elements live over different quivers")

    def _bound_with(self, other: "AlgebraElement") -> Optional[int]:
        bounds: List[int] = [b for b in (self.degree_bound, other.degree_bound) if b is not None]
        return min(bounds) if bounds else None

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check_same(other)
        terms: Terms = dict(self.terms)
        for path, coeff in other.terms.items():
            _merge(terms, path, coeff)
        return AlgebraElement(
            self.quiver,
            terms,
            self._bound_with(other),
            self.truncated or other.truncated,
        )

    def __neg__(self) -> "AlgebraElement":
        return self.scale(-1)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def scale(self, factor: Scalar) -> "AlgebraElement":
        f: Fraction = Fraction(factor)
        return AlgebraElement(
            self.quiver,
            {p: c * f for p, c in self.terms.items()},
            self.degree_bound,
            self.truncated,
        )

    def __rmul__(self, factor: Scalar) -> "AlgebraElement":
        return self.scale(factor)

    def __mul__(self, other: Union["AlgebraElement", Scalar]) -> "AlgebraElement":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return multiply(self, other, self._bound_with(other))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.quiver == other.quiver and dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __iter__(self) -> Iterator[Tuple[Path, Fraction]]:
        for path in sorted(self.terms, key=lambda p: _path_key(self.quiver, p)):
            yield path, self.terms[path]

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self, weights: Optional[Mapping[str, int]] = None) -> int:
        """Largest (weighted) length among the terms; -1 for zero"""
        if not self.terms:
            return -1
        return max(path_weight(p.arrows, weights) for p in self.terms)

    def endpoints(self) -> FrozenSet[Tuple[str, str]]:
        return frozenset((p.source, p.target) for p in self.terms)

    def __str__(self) -> str:
        return _render_terms(self.quiver, self.terms)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({str(self)!r})"

    def to_json(self) -> List[TermDocument]:
        return [
            TermDocument(coeff=fmt_rational(c), path=list(p.arrows), source=p.source)
            for p, c in self
        ]

    @classmethod
    def from_json(
        cls,
        quiver: Quiver,
        data: Iterable[Mapping[str, Any]],
        degree_bound: Optional[int] = None,
    ) -> "AlgebraElement":
        terms: Terms = {}
        for term in data:
            source: Optional[str] = term.get("source")
            path: Path = quiver.path(term["path"], source=source)
            _merge(terms, path, parse_rational(term["coeff"]))
        return cls(quiver, terms, degree_bound)


def path_weight(word: Word, weights: Optional[Mapping[str, int]] = None) -> int:
    if not weights:
        return len(word)
    return sum(weights.get(a, 1) for a in word)


def multiply(x: AlgebraElement, y: AlgebraElement, N: Optional[int] = None) -> AlgebraElement:
    x._check_same(y)  # pylint: disable=protected-access
    terms: Terms = {}
    truncated: bool = x.truncated or y.truncated
    for p, a in x.terms.items():
        for q, b in y.terms.items():
            if p.target != q.source:
                continue
            if N is not None and len(p) + len(q) > N:
                truncated = True
                continue
            _merge(terms, Path(p.source, q.target, p.arrows + q.arrows), a * b)
    return AlgebraElement(x.quiver, terms, N, truncated)


def canonicalize_cycle(p: Path, quiver: Quiver) -> Path:
    """The least rotation of a cycle under the quiver's arrow precedence"""
    if not p.is_cycle:
        raise NotACycle(f"Path {p} is not a cycle")
    prec: Dict[str, int] = quiver.precedence
    missing: List[str] = [a for a in p.arrows if a not in prec]
    if missing:
        raise UnknownArrow(f"Cycle {p} uses unknown arrows {missing}")
    word: Word = p.arrows
    best: Word = min(
        (word[i:] + word[:i] for i in range(len(word))),
        key=lambda w: tuple(prec[a] for a in w),
    )
    start: str = quiver.arrow(best[0]).src
    return Path(start, start, best)


@dataclass(frozen=True, eq=False)
class Potential:
    """A linear combination of cycles, each stored as its canonical rotation"""

    quiver: Quiver
    terms: Mapping[Path, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        canonical: Terms = {}
        for path, coeff in self.terms.items():
            value: Fraction = parse_rational(coeff)
            if value:
                _merge(canonical, canonicalize_cycle(path, self.quiver), value)
        object.__setattr__(self, "terms", canonical)

    @classmethod
    def from_cycles(
        cls, quiver: Quiver, items: Iterable[Tuple[Rational, Sequence[str]]]
    ) -> "Potential":
        terms: Terms = {}
        for coeff, word in items:
            path: Path = quiver.path(word)
            if not path.is_cycle:
                raise NotACycle(f"Potential term {path} is not a cycle")
            _merge(terms, canonicalize_cycle(path, quiver), parse_rational(coeff))
        return cls(quiver, terms)

    def __iter__(self) -> Iterator[Tuple[Path, Fraction]]:
        for path in sorted(self.terms, key=lambda p: _path_key(self.quiver, p)):
            yield path, self.terms[path]

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "Potential") -> "Potential":
        if other.quiver != self.quiver:
            raise QuiverMismatch("Potentials live over different quivers")
        terms: Terms = dict(self.terms)
        for path, coeff in other.terms.items():
            _merge(terms, path, coeff)
        return Potential(self.quiver, terms)

    def scale(self, factor: Scalar) -> "Potential":
        f: Fraction = Fraction(factor)
        return Potential(self.quiver, {p: c * f for p, c in self.terms.items()})

    def __neg__(self) -> "Potential":
        return self.scale(-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Potential):
            return NotImplemented
        return self.quiver == other.quiver and dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def arrows_used(self) -> FrozenSet[str]:
        return frozenset(a for p in self.terms for a in p.arrows)

    def cyclic_derivative(self, arrow_id: str) -> AlgebraElement:
        return cyclic_derivative(self, arrow_id)

    def rebased(self, quiver: Quiver) -> "Potential":
        """Same cycles over another quiver (re-canonicalized under its precedence)"""
        return Potential(quiver, dict(self.terms))

    def degree2_terms(self) -> List[Tuple[Path, Fraction]]:
        return [(p, c) for p, c in self if len(p) == 2]

    def __str__(self) -> str:
        return _render_terms(self.quiver, self.terms)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({str(self)!r})"

    def to_json(self) -> List[CycleDocument]:
        return [CycleDocument(coeff=fmt_rational(c), cycle=list(p.arrows)) for p, c in self]

    @classmethod
    def from_json(cls, quiver: Quiver, data: Iterable[Mapping[str, Any]]) -> "Potential":
        try:
            return cls.from_cycles(quiver, ((t["coeff"], t["cycle"]) for t in data))
        except (KeyError, TypeError) as exc:
            raise QuiverError(f"Malformed potential document: {exc}") from exc


def cyclic_derivative(W: Potential, arrow_id: str) -> AlgebraElement:
    arrow = W.quiver.arrow(arrow_id)
    terms: Terms = {}
    for cycle, coeff in W.terms.items():
        word: Word = cycle.arrows
        for i, a in enumerate(word):
            if a != arrow_id:
                continue
            tail: Word = word[i + 1:] + word[:i]
            _merge(terms, Path(arrow.tgt, arrow.src, tail), coeff)
    return AlgebraElement(W.quiver, terms)


def cyclically_equivalent(W1: Potential, W2: Potential) -> bool:
    if W1.quiver != W2.quiver:
        raise QuiverMismatch("Potentials live over different quivers")
    return dict(W1.terms) == dict(W2.terms)


def is_homogeneous(W: Potential, weights: Mapping[str, int]) -> bool:
    degrees = {path_weight(p.arrows, weights) for p in W.terms}
    return len(degrees) <= 1


@dataclass(frozen=True, eq=False)
class IceQP:
    """
    An ice quiver with potential.
    ``external`` lists the external arrows (the Y arrows of surface QPs),
    ``weights`` the grading used by the default monomial order (missing
    arrows weigh 1) and ``boundary`` the cyclic order of the frozen vertices
    along each boundary component.
    """

    quiver: Quiver
    potential: Potential
    external: Tuple[str, ...] = ()
    weights: Mapping[str, int] = field(default_factory=dict)
    boundary: Tuple[Tuple[str, ...], ...] = ()

    def __post_init__(self):
        if self.potential.quiver is not self.quiver and self.potential.quiver != self.quiver:
            raise QuiverMismatch("Potential is not defined over the QP quiver")
        unknown: List[str] = sorted(self.potential.arrows_used() - set(self.quiver.arrow_map))
        if unknown:
            raise UnknownArrow(f"Potential uses arrows not in the quiver: {unknown}")
        for arrow_id in self.external:
            self.quiver.arrow(arrow_id)
        bad: List[str] = [a for a, w in self.weights.items() if int(w) < 1]
        if bad:
            raise QuiverError(f"Arrow weights must be positive integers: {bad}")

    @property
    def frozen(self) -> FrozenSet[str]:
        return self.quiver.frozen

    @property
    def frozen_vertices(self) -> Tuple[str, ...]:
        return tuple(v for v in self.quiver.vertices if v in self.quiver.frozen)

    @property
    def boundary_components(self) -> Tuple[Tuple[str, ...], ...]:
        if self.boundary:
            return self.boundary
        return (self.frozen_vertices,) if self.frozen_vertices else ()

    @property
    def default_variant(self) -> str:
        return EXCLUDE_Y_ONLY if self.external else NOT_BOTH_FROZEN

    def weight(self, arrow_id: str) -> int:
        return int(self.weights.get(arrow_id, 1))

    def differentiable(self, variant: Optional[str] = None) -> List[str]:
        """Arrows whose cyclic derivatives generate the frozen Jacobian ideal"""
        variant = variant or self.default_variant
        if variant == NOT_BOTH_FROZEN:
            return [
                a.id
                for a in self.quiver.arrows
                if not (a.src in self.frozen and a.tgt in self.frozen)
            ]
        if variant == EXCLUDE_Y_ONLY:
            external: FrozenSet[str] = frozenset(self.external)
            return [a.id for a in self.quiver.arrows if a.id not in external]
        raise ValueError(f"Unknown ideal variant {variant!r}")

    def diagnostics(self) -> List[Diagnostic]:
        return validate(self.quiver)

    def with_precedence(self, order: Sequence[str]) -> "IceQP":
        quiver: Quiver = self.quiver.with_precedence(order)
        return IceQP(
            quiver,
            self.potential.rebased(quiver),
            self.external,
            self.weights,
            self.boundary,
        )

    def with_weights(self, weights: Mapping[str, int]) -> "IceQP":
        for arrow_id in weights:
            self.quiver.arrow(arrow_id)
        return IceQP(
            self.quiver,
            self.potential,
            self.external,
            {**self.weights, **weights},
            self.boundary,
        )

    def to_json(self) -> IceQPDocument:
        return IceQPDocument(
            quiver=self.quiver.to_json(),
            potential=self.potential.to_json(),
            external=list(self.external),
            weights={a.id: self.weight(a.id) for a in self.quiver.arrows if a.id in self.weights},
            boundary=[list(c) for c in self.boundary],
        )

    @classmethod
    def from_json(cls, data: IceQPDocument) -> "IceQP":
        try:
            quiver: Quiver = Quiver.from_json(data["quiver"])
            return cls(
                quiver=quiver,
                potential=Potential.from_json(quiver, data.get("potential", [])),
                external=tuple(data.get("external", [])),
                weights={str(k): int(v) for k, v in data.get("weights", {}).items()},
                boundary=tuple(tuple(c) for c in data.get("boundary", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise QuiverError(f"Malformed ice QP document: {exc}") from exc


def load_qp(path: str) -> IceQP:
    """Load an ice QP file, rejecting structurally broken quivers"""
    qp: IceQP = IceQP.from_json(load_json(path))
    fatal: List[Diagnostic] = [
        d for d in qp.diagnostics() if d.kind not in ("loop", "two-cycle")
    ]
    if fatal:
        raise QuiverError(
            f"Invalid quiver in {path}: " + "; ".join(str(d) for d in fatal)
        )
    return qp
