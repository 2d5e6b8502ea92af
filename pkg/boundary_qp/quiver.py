import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import (
    TypedDict,
    Tuple,
    FrozenSet,
    Dict,
    List,
    Sequence,
    Optional,
    Mapping,
    Iterable,
    DefaultDict,
)

import networkx as nx
from networkx.algorithms.isomorphism import categorical_node_match

from .utils import Word


__all__ = [
    "QuiverError",
    "CompositionMismatch",
    "UnknownVertex",
    "UnknownArrow",
    "Arrow",
    "Path",
    "Quiver",
    "Diagnostic",
    "compose",
    "validate",
    "has_two_cycle_at",
    "arrow_bijection",
]


logger: logging.Logger = logging.getLogger(__name__)


class QuiverError(Exception):
    ...


class CompositionMismatch(QuiverError):
    ...


class UnknownVertex(QuiverError):
    ...


class UnknownArrow(QuiverError):
    ...


class ArrowDocument(TypedDict):
    id: str
    src: str
    tgt: str


class QuiverDocument(TypedDict):
    vertices: List[str]
    frozen: List[str]
    arrows: List[ArrowDocument]


@dataclass(frozen=True)
class Arrow:
    id: str
    src: str
    tgt: str

    @property
    def is_loop(self) -> bool:
        return self.src == self.tgt


@dataclass(frozen=True)
class Path:
    """
    A path of a quiver, arrows composed left to right.
    The trivial path ``e_v`` has no arrows and ``source == target == v``.
    """

    source: str
    target: str
    arrows: Word = ()

    @classmethod
    def trivial(cls, vertex: str) -> "Path":
        return cls(vertex, vertex, ())

    @property
    def is_trivial(self) -> bool:
        return not self.arrows

    @property
    def is_cycle(self) -> bool:
        return bool(self.arrows) and self.source == self.target

    def __len__(self) -> int:
        return len(self.arrows)

    def __mul__(self, other: "Path") -> "Path":
        return compose(self, other)

    def __str__(self) -> str:
        return ".".join(self.arrows) if self.arrows else f"e_{self.source}"


def compose(p: Path, q: Path) -> Path:
    if p.target != q.source:
        raise CompositionMismatch(
            f"Cannot compose {p} (ending at {p.target}) with {q} (starting at {q.source})"
        )
    return Path(p.source, q.target, p.arrows + q.arrows)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str
    location: Tuple[str, ...] = ()

    def __str__(self) -> str:
        where: str = f" at {', '.join(self.location)}" if self.location else ""
        return f"[{self.kind}]{where}: {self.message}"


@dataclass(frozen=True)
class Quiver:
    """
    A finite quiver with a set of frozen vertices.
    Arrow declaration order is the global arrow precedence.
    """

    vertices: Tuple[str, ...]
    arrows: Tuple[Arrow, ...]
    frozen: FrozenSet[str] = frozenset()

    @classmethod
    def from_edges(
        cls,
        vertices: Iterable[str],
        arrows: Iterable[Tuple[str, str, str]],
        frozen: Iterable[str] = (),
    ) -> "Quiver":
        return cls(
            vertices=tuple(vertices),
            arrows=tuple(Arrow(*a) for a in arrows),
            frozen=frozenset(frozen),
        )

    @cached_property
    def arrow_map(self) -> Dict[str, Arrow]:
        return {a.id: a for a in self.arrows}

    @cached_property
    def precedence(self) -> Dict[str, int]:
        return {a.id: i for i, a in enumerate(self.arrows)}

    @cached_property
    def _vertex_set(self) -> FrozenSet[str]:
        return frozenset(self.vertices)

    @cached_property
    def _outgoing(self) -> Mapping[str, Tuple[Arrow, ...]]:
        out: DefaultDict[str, List[Arrow]] = defaultdict(list)
        for arrow in self.arrows:
            out[arrow.src].append(arrow)
        return {v: tuple(arrows) for v, arrows in out.items()}

    @cached_property
    def _incoming(self) -> Mapping[str, Tuple[Arrow, ...]]:
        inc: DefaultDict[str, List[Arrow]] = defaultdict(list)
        for arrow in self.arrows:
            inc[arrow.tgt].append(arrow)
        return {v: tuple(arrows) for v, arrows in inc.items()}

    def has_vertex(self, vertex: str) -> bool:
        return vertex in self._vertex_set

    def check_vertex(self, vertex: str) -> None:
        if vertex not in self._vertex_set:
            raise UnknownVertex(f"Vertex {vertex!r} is not in the quiver")

    def arrow(self, arrow_id: str) -> Arrow:
        try:
            return self.arrow_map[arrow_id]
        except KeyError as exc:
            raise UnknownArrow(f"Arrow {arrow_id!r} is not in the quiver") from exc

    def is_frozen(self, vertex: str) -> bool:
        return vertex in self.frozen

    def outgoing(self, vertex: str) -> Tuple[Arrow, ...]:
        return self._outgoing.get(vertex, ())

    def incoming(self, vertex: str) -> Tuple[Arrow, ...]:
        return self._incoming.get(vertex, ())

    def arrows_between(self, src: str, tgt: str) -> List[Arrow]:
        return [a for a in self.outgoing(src) if a.tgt == tgt]

    def path(self, arrow_ids: Sequence[str], source: Optional[str] = None) -> Path:
        """
        Build a checked path from arrow ids.
        ``source`` is required for the trivial path.
        """
        if not arrow_ids:
            if source is None:
                raise CompositionMismatch("A trivial path needs its base vertex")
            self.check_vertex(source)
            return Path.trivial(source)
        arrows: List[Arrow] = [self.arrow(a) for a in arrow_ids]
        if source is not None and arrows[0].src != source:
            raise CompositionMismatch(
                f"Path {'.'.join(arrow_ids)} does not start at {source}"
            )
        for left, right in zip(arrows, arrows[1:]):
            if left.tgt != right.src:
                raise CompositionMismatch(
                    f"Arrows {left.id} and {right.id} do not compose "
                    f"({left.tgt} != {right.src})"
                )
        return Path(arrows[0].src, arrows[-1].tgt, tuple(arrow_ids))

    def path_through(self, vertices: Sequence[str]) -> Path:
        """Path following the unique arrow between each pair of consecutive vertices"""
        if len(vertices) == 1:
            return self.path((), source=vertices[0])
        ids: List[str] = []
        for src, tgt in zip(vertices, vertices[1:]):
            candidates: List[Arrow] = self.arrows_between(src, tgt)
            if len(candidates) != 1:
                raise UnknownArrow(
                    f"Expected exactly one arrow {src} -> {tgt}, found {len(candidates)}"
                )
            ids.append(candidates[0].id)
        return self.path(ids)

    def with_precedence(self, order: Sequence[str]) -> "Quiver":
        """Reorder arrows: listed ids first in the given order, the rest as declared"""
        ranked: Dict[str, int] = {a: i for i, a in enumerate(order)}
        unknown: List[str] = [a for a in ranked if a not in self.arrow_map]
        if unknown:
            raise UnknownArrow(f"Precedence names unknown arrows: {unknown}")
        arrows: List[Arrow] = sorted(
            self.arrows,
            key=lambda a: (0, ranked[a.id]) if a.id in ranked else (1, self.precedence[a.id]),
        )
        return Quiver(self.vertices, tuple(arrows), self.frozen)

    def without_arrows(self, arrow_ids: Iterable[str]) -> "Quiver":
        dropped: FrozenSet[str] = frozenset(arrow_ids)
        return Quiver(
            self.vertices,
            tuple(a for a in self.arrows if a.id not in dropped),
            self.frozen,
        )

    def to_graph(self) -> nx.MultiDiGraph:
        graph: nx.MultiDiGraph = nx.MultiDiGraph()
        for vertex in self.vertices:
            graph.add_node(vertex, frozen=vertex in self.frozen)
        for arrow in self.arrows:
            graph.add_edge(arrow.src, arrow.tgt, key=arrow.id)
        return graph

    def is_isomorphic(self, other: "Quiver") -> bool:
        """Directed multigraph isomorphism preserving the frozen flag"""
        return nx.is_isomorphic(
            self.to_graph(),
            other.to_graph(),
            node_match=categorical_node_match("frozen", False),
        )

    def to_dot(self, name: str = "Q") -> str:
        lines: List[str] = [f'digraph "{name}" {{']
        for vertex in self.vertices:
            shape: str = "box" if vertex in self.frozen else "ellipse"
            lines.append(f'  "{vertex}" [shape={shape}];')
        for arrow in self.arrows:
            lines.append(f'  "{arrow.src}" -> "{arrow.tgt}" [label="{arrow.id}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> QuiverDocument:
        return QuiverDocument(
            vertices=list(self.vertices),
            frozen=[v for v in self.vertices if v in self.frozen],
            arrows=[ArrowDocument(id=a.id, src=a.src, tgt=a.tgt) for a in self.arrows],
        )

    @classmethod
    def from_json(cls, data: QuiverDocument) -> "Quiver":
        try:
            return cls(
                vertices=tuple(str(v) for v in data["vertices"]),
                arrows=tuple(
                    Arrow(str(a["id"]), str(a["src"]), str(a["tgt"]))
                    for a in data["arrows"]
                ),
                frozen=frozenset(str(v) for v in data.get("frozen", [])),
            )
        except (KeyError, TypeError) as exc:
            raise QuiverError(f"Malformed quiver document: {exc}") from exc


def validate(q: Quiver) -> List[Diagnostic]:
    diagnostics: List[Diagnostic] = []
    for vertex, count in Counter(q.vertices).items():
        if count > 1:
            diagnostics.append(
                Diagnostic("duplicate-vertex", f"declared {count} times", (vertex,))
            )
    for arrow_id, count in Counter(a.id for a in q.arrows).items():
        if count > 1:
            diagnostics.append(
                Diagnostic("duplicate-arrow", f"declared {count} times", (arrow_id,))
            )
    vertex_set: FrozenSet[str] = frozenset(q.vertices)
    for vertex in sorted(q.frozen - vertex_set):
        diagnostics.append(
            Diagnostic("unknown-frozen", "frozen vertex is not declared", (vertex,))
        )
    for arrow in q.arrows:
        missing: List[str] = [v for v in (arrow.src, arrow.tgt) if v not in vertex_set]
        if missing:
            diagnostics.append(
                Diagnostic(
                    "dangling-arrow",
                    f"endpoint(s) {', '.join(missing)} not declared",
                    (arrow.id,),
                )
            )
        if arrow.is_loop:
            diagnostics.append(
                Diagnostic("loop", f"arrow {arrow.id} is a loop", (arrow.src,))
            )
    seen_pairs: Dict[Tuple[str, str], List[str]] = defaultdict(list)
    for arrow in q.arrows:
        if not arrow.is_loop:
            seen_pairs[(arrow.src, arrow.tgt)].append(arrow.id)
    for (src, tgt), forward in sorted(seen_pairs.items()):
        backward: List[str] = seen_pairs.get((tgt, src), [])
        if backward and src < tgt:
            diagnostics.append(
                Diagnostic(
                    "two-cycle",
                    f"arrows {', '.join(forward)} and {', '.join(backward)} form 2-cycles",
                    (src, tgt),
                )
            )
    return diagnostics


def has_two_cycle_at(q: Quiver, k: str) -> bool:
    q.check_vertex(k)
    sources: FrozenSet[str] = frozenset(a.src for a in q.incoming(k) if not a.is_loop)
    return any(a.tgt in sources for a in q.outgoing(k) if not a.is_loop)


def arrow_bijection(
    q1: Quiver, q2: Quiver, vertex_map: Optional[Mapping[str, str]] = None
) -> Optional[Dict[str, str]]:
    """
    Match arrows of ``q1`` to arrows of ``q2`` with the same endpoints, after
    renaming ``q1`` vertices through ``vertex_map`` (identity where missing).
    Returns ``None`` when the quivers differ.
    """
    rename: Mapping[str, str] = vertex_map or {}

    def vmap(v: str) -> str:
        return rename.get(v, v)

    if {vmap(v) for v in q1.vertices} != set(q2.vertices):
        return None
    if {vmap(v) for v in q1.frozen} != set(q2.frozen):
        return None
    by_ends: DefaultDict[Tuple[str, str], List[str]] = defaultdict(list)
    for arrow in q2.arrows:
        by_ends[(arrow.src, arrow.tgt)].append(arrow.id)
    mapping: Dict[str, str] = {}
    for arrow in q1.arrows:
        bucket: List[str] = by_ends.get((vmap(arrow.src), vmap(arrow.tgt)), [])
        if not bucket:
            return None
        mapping[arrow.id] = bucket.pop(0)
    if any(by_ends.values()):
        return None
    return mapping
