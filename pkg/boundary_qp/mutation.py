import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import (
    TypedDict,
    List,
    Tuple,
    Dict,
    Optional,
    Mapping,
    FrozenSet,
    Set,
    Any,
)

from .algebra import IceQP, Potential, AlgebraElement, Terms, path_weight
from .quiver import Quiver, Arrow, Path, QuiverError, has_two_cycle_at
from .utils import DEFAULT_DEGREE, Word


__all__ = [
    "MutationError",
    "FrozenVertexError",
    "TwoCycleError",
    "LoopError",
    "NonterminationError",
    "MutationReport",
    "premutate",
    "reduce",
    "mutate",
]


logger: logging.Logger = logging.getLogger(__name__)


MAX_REDUCTION_STEPS: int = 10_000


class MutationError(QuiverError):
    ...


class FrozenVertexError(MutationError):
    ...


class TwoCycleError(MutationError):
    ...


class LoopError(MutationError):
    ...


class NonterminationError(MutationError):
    ...


class SubstitutionDocument(TypedDict):
    arrow: str
    correction: List[Dict[str, Any]]


class MutationReportDocument(TypedDict):
    added_composite_arrows: List[List[str]]
    reversed_arrows: List[List[str]]
    removed_trivial_pairs: List[List[str]]
    substitutions: List[SubstitutionDocument]


@dataclass
class MutationReport:
    """
    What a premutation and/or reduction did.
    ``substitutions`` records, per step, the correction added to an arrow
    (``arrow -> arrow + correction``).
    """

    added_composite_arrows: List[Tuple[str, str, str]] = field(default_factory=list)
    reversed_arrows: List[Tuple[str, str]] = field(default_factory=list)
    removed_trivial_pairs: List[Tuple[str, str]] = field(default_factory=list)
    substitutions: List[Tuple[str, AlgebraElement]] = field(default_factory=list)

    def extend(self, other: "MutationReport") -> "MutationReport":
        return MutationReport(
            self.added_composite_arrows + other.added_composite_arrows,
            self.reversed_arrows + other.reversed_arrows,
            self.removed_trivial_pairs + other.removed_trivial_pairs,
            self.substitutions + other.substitutions,
        )

    def to_json(self) -> MutationReportDocument:
        return MutationReportDocument(
            added_composite_arrows=[list(t) for t in self.added_composite_arrows],
            reversed_arrows=[list(t) for t in self.reversed_arrows],
            removed_trivial_pairs=[list(t) for t in self.removed_trivial_pairs],
            substitutions=[
                SubstitutionDocument(arrow=a, correction=list(c.to_json()))
                for a, c in self.substitutions
            ],
        )


def reversed_id(arrow_id: str) -> str:
    return f"{arrow_id}*"


def composite_id(alpha: str, beta: str) -> str:
    return f"[{alpha}.{beta}]"


def _rotate_off(word: Word, quiver: Quiver, k: str) -> Word:
    """Rotate a cycle so that it does not start (and end) at ``k``"""
    for i in range(len(word)):
        if quiver.arrow(word[i]).src != k:
            return word[i:] + word[:i]
    raise LoopError(f"Cycle {'.'.join(word)} never leaves vertex {k}")


def _mutated_weights(
    qp: IceQP, k: str, composites: Mapping[Tuple[str, str], str]
) -> Dict[str, int]:
    """
    Weights keeping the mutated potential homogeneous of the same degree D.
    Arrows away from ``k`` keep theirs and a composite weighs the sum of its
    factors. With s one more than the heaviest arrow into ``k``, the reversal
    of an arrow into ``k`` weighs s minus its weight and the reversal of an
    arrow out of ``k`` weighs D - s minus its weight. Empty (unit grading)
    when the QP is ungraded, its potential is not homogeneous or a weight
    would not be positive.
    """
    if not qp.weights:
        return {}
    degrees: Set[int] = {
        path_weight(p.arrows, {a.id: qp.weight(a.id) for a in qp.quiver.arrows})
        for p, _ in qp.potential
    }
    if len(degrees) != 1:
        logger.debug(f"Potential is not homogeneous, mutation at {k} drops the grading")
        return {}
    D: int = degrees.pop()
    s: int = 1 + max((qp.weight(a.id) for a in qp.quiver.incoming(k)), default=0)
    weights: Dict[str, int] = {}
    for arrow in qp.quiver.arrows:
        if arrow.tgt == k:
            weights[reversed_id(arrow.id)] = s - qp.weight(arrow.id)
        elif arrow.src == k:
            weights[reversed_id(arrow.id)] = D - s - qp.weight(arrow.id)
        else:
            weights[arrow.id] = qp.weight(arrow.id)
    for (alpha, beta), name in composites.items():
        weights[name] = qp.weight(alpha) + qp.weight(beta)
    if min(weights.values(), default=1) < 1:
        logger.debug(f"No positive grading after mutation at {k}, using unit weights")
        return {}
    return weights


def premutate(qp: IceQP, k: str) -> Tuple[IceQP, MutationReport]:
    quiver: Quiver = qp.quiver
    quiver.check_vertex(k)
    if quiver.is_frozen(k):
        raise FrozenVertexError(f"Cannot mutate at frozen vertex {k}")
    if any(a.is_loop for a in quiver.outgoing(k)):
        raise LoopError(f"Cannot mutate at {k}: there is a loop at {k}")
    if has_two_cycle_at(quiver, k):
        raise TwoCycleError(f"Cannot mutate at {k}: there is a 2-cycle through {k}")

    incoming: List[Arrow] = list(quiver.incoming(k))
    outgoing: List[Arrow] = list(quiver.outgoing(k))
    report: MutationReport = MutationReport()

    new_arrows: List[Arrow] = []
    for arrow in quiver.arrows:
        if arrow.src == k or arrow.tgt == k:
            star: str = reversed_id(arrow.id)
            new_arrows.append(Arrow(star, arrow.tgt, arrow.src))
            report.reversed_arrows.append((arrow.id, star))
        else:
            new_arrows.append(arrow)
    composites: Dict[Tuple[str, str], str] = {}
    for alpha in incoming:
        for beta in outgoing:
            name: str = composite_id(alpha.id, beta.id)
            composites[(alpha.id, beta.id)] = name
            new_arrows.append(Arrow(name, alpha.src, beta.tgt))
            report.added_composite_arrows.append((name, alpha.id, beta.id))
    ids: List[str] = [a.id for a in new_arrows]
    if len(set(ids)) != len(ids):
        raise MutationError(f"Mutation at {k} produces clashing arrow names")
    new_quiver: Quiver = Quiver(quiver.vertices, tuple(new_arrows), quiver.frozen)

    cycles: List[Tuple[Fraction, Word]] = []
    for cycle, coeff in qp.potential:
        word: Word = _rotate_off(cycle.arrows, quiver, k)
        replaced: List[str] = []
        i: int = 0
        while i < len(word):
            if i + 1 < len(word) and quiver.arrow(word[i]).tgt == k:
                replaced.append(composites[(word[i], word[i + 1])])
                i += 2
            else:
                replaced.append(word[i])
                i += 1
        cycles.append((coeff, tuple(replaced)))
    for (alpha_id, beta_id), name in composites.items():
        cycles.append((Fraction(1), (name, reversed_id(beta_id), reversed_id(alpha_id))))
    potential: Potential = Potential.from_cycles(new_quiver, cycles)

    logger.debug(
        f"Premutation at {k}: {len(report.reversed_arrows)} arrows reversed, "
        f"{len(report.added_composite_arrows)} composites added"
    )
    return (
        IceQP(
            new_quiver, potential, qp.external, _mutated_weights(qp, k, composites), qp.boundary
        ),
        report,
    )


def _substitute(
    terms: Mapping[Path, Fraction],
    arrow_id: str,
    correction: Mapping[Path, Fraction],
    N: int,
) -> Terms:
    """Replace ``arrow_id`` by ``arrow_id + correction`` in every cycle"""
    result: Terms = {}
    for cycle, coeff in terms.items():
        partial: Dict[Word, Fraction] = {(): coeff}
        for a in cycle.arrows:
            options: List[Tuple[Word, Fraction]] = [((a,), Fraction(1))]
            if a == arrow_id:
                options.extend((p.arrows, c) for p, c in correction.items())
            extended: Dict[Word, Fraction] = {}
            for prefix, c1 in partial.items():
                for piece, c2 in options:
                    word: Word = prefix + piece
                    if len(word) > N:
                        raise NonterminationError(
                            f"Substituting {arrow_id} produces terms beyond degree {N}"
                        )
                    extended[word] = extended.get(word, Fraction(0)) + c1 * c2
            partial = {w: c for w, c in extended.items() if c}
        for word, c in partial.items():
            path: Path = Path(cycle.source, cycle.source, word)
            total: Fraction = result.get(path, Fraction(0)) + c
            if total:
                result[path] = total
            else:
                result.pop(path, None)
    return result


def _eligible_pair(
    path: Path, qp: IceQP, differentiable: FrozenSet[str]
) -> Optional[Tuple[str, str]]:
    if len(path) != 2:
        return None
    alpha, beta = path.arrows
    if alpha == beta or alpha not in differentiable or beta not in differentiable:
        return None
    if qp.quiver.arrow(alpha).is_loop:
        return None
    return alpha, beta


def reduce(
    qp: IceQP, N: int = DEFAULT_DEGREE, variant: Optional[str] = None
) -> Tuple[IceQP, MutationReport]:
    """
    Split off the trivial part of the potential: eliminate every degree-2
    term whose two arrows are both differentiable.
    """
    report: MutationReport = MutationReport()
    quiver: Quiver = qp.quiver
    differentiable: FrozenSet[str] = frozenset(qp.differentiable(variant))
    potential: Potential = qp.potential
    removed: Set[str] = set()

    while True:
        candidates: List[Tuple[Path, Fraction]] = [
            (p, c)
            for p, c in potential
            if _eligible_pair(p, qp, differentiable) is not None
        ]
        if not candidates:
            break
        two_cycle, c = candidates[0]
        alpha, beta = two_cycle.arrows
        steps: int = 0
        while True:
            bad: List[Tuple[Path, Fraction]] = [
                (p, lam)
                for p, lam in potential
                if p != two_cycle and (alpha in p.arrows or beta in p.arrows)
            ]
            if not bad:
                break
            steps += 1
            if steps > MAX_REDUCTION_STEPS:
                raise NonterminationError(
                    f"Reduction of {alpha}.{beta} does not stabilize below degree {N}"
                )
            term, lam = bad[0]
            word: Word = term.arrows
            pivot: str = alpha if alpha in word else beta
            i: int = word.index(pivot)
            rest: Word = word[i + 1:] + word[:i]
            target: str = beta if pivot == alpha else alpha
            target_arrow: Arrow = quiver.arrow(target)
            correction: Terms = {
                Path(target_arrow.src, target_arrow.tgt, rest): -lam / c
            }
            logger.debug(
                f"Reduction step: {target} -> {target} + {-lam / c}*{'.'.join(rest)}"
            )
            report.substitutions.append(
                (target, AlgebraElement(quiver, correction))
            )
            potential = Potential(quiver, _substitute(potential.terms, target, correction, N))
            if potential.terms.get(two_cycle) != c:
                raise NonterminationError(
                    f"Reduction of {alpha}.{beta} changed its own coefficient"
                )
        remaining: Terms = {p: v for p, v in potential.terms.items() if p != two_cycle}
        removed.update((alpha, beta))
        report.removed_trivial_pairs.append((alpha, beta))
        quiver = quiver.without_arrows((alpha, beta))
        differentiable = differentiable - {alpha, beta}
        potential = Potential(quiver, remaining)
        qp = IceQP(
            quiver,
            potential,
            qp.external,
            {a: w for a, w in qp.weights.items() if a not in removed},
            qp.boundary,
        )
    return qp, report


def mutate(
    qp: IceQP, k: str, N: int = DEFAULT_DEGREE, variant: Optional[str] = None
) -> Tuple[IceQP, MutationReport]:
    premutated, pre_report = premutate(qp, k)
    reduced, red_report = reduce(premutated, N=N, variant=variant)
    logger.info(
        f"Mutated at {k}: {len(reduced.quiver.arrows)} arrows, "
        f"{len(reduced.potential)} potential terms"
    )
    return reduced, pre_report.extend(red_report)
