import logging
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    TypedDict,
    Tuple,
    List,
    Dict,
    Optional,
    Mapping,
    Sequence,
    Iterable,
    DefaultDict,
    Union,
    Any,
    Set,
    FrozenSet,
    Deque,
)

import networkx as nx

from .algebra import IceQP, Potential
from .mutation import reduce
from .quiver import Quiver, Arrow, Diagnostic
from .utils import load_json, Word


__all__ = [
    "SurfaceError",
    "DegenerateSurface",
    "InvalidTriangulation",
    "NotAnArc",
    "NotFlippable",
    "UnsupportedConfiguration",
    "SurfaceSignature",
    "Edge",
    "Triangle",
    "Corner",
    "Triangulation",
    "FlipOrbit",
    "arc_count",
    "validate_triangulation",
    "ensure_valid",
    "flip",
    "flip_orbit",
    "canonical_key",
    "corner_chain",
    "corner_path",
    "angle_grading",
    "build_ice_qp",
    "load_triangulation",
    "BOUNDARY",
    "ARC",
    "ALL_EXTERNAL",
    "INCIDENT_ONLY",
]


logger: logging.Logger = logging.getLogger(__name__)


BOUNDARY: str = "boundary"
ARC: str = "arc"
EDGE_KINDS: Tuple[str, ...] = (BOUNDARY, ARC)

ALL_EXTERNAL: str = "all-external"
INCIDENT_ONLY: str = "incident-only"
QP_VARIANTS: Tuple[str, ...] = (ALL_EXTERNAL, INCIDENT_ONLY)

EXTERNAL_WEIGHT: int = 2


class SurfaceError(Exception):
    ...


class DegenerateSurface(SurfaceError):
    ...


class InvalidTriangulation(SurfaceError):
    def __init__(self, message: str, diagnostics: Iterable[Diagnostic] = ()):
        self.diagnostics: List[Diagnostic] = list(diagnostics)
        if self.diagnostics:
            message += ": " + "; ".join(str(d) for d in self.diagnostics)
        super().__init__(message)


class NotAnArc(SurfaceError):
    ...


class NotFlippable(SurfaceError):
    ...


class UnsupportedConfiguration(SurfaceError):
    ...


class SignatureDocument(TypedDict):
    genus: int
    boundary: List[int]
    punctures: int


class MarkedPointsDocument(TypedDict):
    boundary: List[List[str]]
    punctures: List[str]


class EdgeDocument(TypedDict):
    id: str
    ends: List[str]
    kind: str


class TriangleDocument(TypedDict):
    sides: List[str]
    corners: List[str]


class TriangulationDocument(TypedDict):
    signature: SignatureDocument
    marked_points: MarkedPointsDocument
    edges: List[EdgeDocument]
    triangles: List[Union[TriangleDocument, List[str]]]


@dataclass(frozen=True)
class SurfaceSignature:
    genus: int
    boundary_marked: Tuple[int, ...]
    punctures: int = 0

    @property
    def b(self) -> int:
        return len(self.boundary_marked)

    @property
    def c(self) -> int:
        return sum(self.boundary_marked)

    def check(self) -> None:
        if self.genus < 0 or self.punctures < 0:
            raise DegenerateSurface(f"Negative genus or puncture count in {self}")
        if any(m < 1 for m in self.boundary_marked):
            raise DegenerateSurface(f"Every boundary component needs a marked point: {self}")
        if self.genus == 0 and self.b == 1:
            if self.c == 1 and self.punctures <= 1:
                raise DegenerateSurface("Monogon with at most one puncture is excluded")
            if self.c in (2, 3) and self.punctures == 0:
                raise DegenerateSurface("Unpunctured digon and triangle are excluded")
        if self.genus == 0 and self.b == 0 and self.punctures < 4:
            raise DegenerateSurface("Sphere with fewer than four punctures is excluded")
        if self._raw_arc_count() <= 0:
            raise DegenerateSurface(f"Surface {self} admits no arcs")

    def _raw_arc_count(self) -> int:
        return 6 * self.genus + 3 * self.b + 3 * self.punctures + self.c - 6

    def arc_count(self) -> int:
        self.check()
        return self._raw_arc_count()

    def __str__(self) -> str:
        return (
            f"(g={self.genus}, b={self.b}, p={self.punctures}, c={self.c}, "
            f"boundary={list(self.boundary_marked)})"
        )

    def to_json(self) -> SignatureDocument:
        return SignatureDocument(
            genus=self.genus, boundary=list(self.boundary_marked), punctures=self.punctures
        )

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "SurfaceSignature":
        return cls(
            genus=int(data.get("genus", 0)),
            boundary_marked=tuple(int(m) for m in data.get("boundary", [])),
            punctures=int(data.get("punctures", 0)),
        )


def arc_count(sig: SurfaceSignature) -> int:
    return sig.arc_count()


@dataclass(frozen=True)
class Edge:
    id: str
    ends: Tuple[str, str]
    kind: str

    @property
    def is_arc(self) -> bool:
        return self.kind == ARC


@dataclass(frozen=True)
class Triangle:
    """
    Three sides listed clockwise around the interior.
    ``corners[j]`` is the marked point between ``sides[j]`` and ``sides[j + 1]``.
    """

    sides: Tuple[str, str, str]
    corners: Tuple[str, str, str]

    def rotated(self, shift: int) -> "Triangle":
        shift %= 3
        return Triangle(
            self.sides[shift:] + self.sides[:shift],  # type: ignore
            self.corners[shift:] + self.corners[:shift],  # type: ignore
        )

    def slots(self, edge_id: str) -> List[int]:
        return [j for j, s in enumerate(self.sides) if s == edge_id]


@dataclass(frozen=True)
class Corner:
    triangle: int
    index: int
    point: str
    incoming: str
    outgoing: str

    @property
    def arrow_id(self) -> str:
        return f"t{self.triangle}_{self.index}"


Slot = Tuple[int, int]


@dataclass(frozen=True)
class Triangulation:
    signature: SurfaceSignature
    boundary_points: Tuple[Tuple[str, ...], ...]
    punctures: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    triangles: Tuple[Triangle, ...]

    @classmethod
    def build(
        cls,
        signature: SurfaceSignature,
        boundary_points: Sequence[Sequence[str]],
        punctures: Sequence[str],
        edges: Iterable[Edge],
        triangles: Iterable[Triangle],
    ) -> "Triangulation":
        return cls(
            signature,
            tuple(tuple(c) for c in boundary_points),
            tuple(punctures),
            tuple(edges),
            tuple(triangles),
        ).normalized()

    @cached_property
    def points(self) -> Tuple[str, ...]:
        return tuple(p for c in self.boundary_points for p in c) + self.punctures

    @cached_property
    def point_index(self) -> Dict[str, int]:
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def edge_map(self) -> Dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def edge_index(self) -> Dict[str, int]:
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def slots(self) -> Mapping[str, Tuple[Slot, ...]]:
        found: DefaultDict[str, List[Slot]] = defaultdict(list)
        for t, triangle in enumerate(self.triangles):
            for j, side in enumerate(triangle.sides):
                found[side].append((t, j))
        return {e: tuple(s) for e, s in found.items()}

    @property
    def arcs(self) -> List[Edge]:
        return [e for e in self.edges if e.kind == ARC]

    @property
    def boundary_edges(self) -> List[Edge]:
        return [e for e in self.edges if e.kind == BOUNDARY]

    def edge(self, edge_id: str) -> Edge:
        try:
            return self.edge_map[edge_id]
        except KeyError as exc:
            raise NotAnArc(f"No edge named {edge_id!r}") from exc

    def is_boundary_point(self, point: str) -> bool:
        return any(point in c for c in self.boundary_points)

    @cached_property
    def corners(self) -> Tuple[Corner, ...]:
        return tuple(
            Corner(t, j, tri.corners[j], tri.sides[j], tri.sides[(j + 1) % 3])
            for t, tri in enumerate(self.triangles)
            for j in range(3)
        )

    @cached_property
    def _segments(self) -> Tuple[Dict[str, str], Dict[str, str]]:
        by_ends: Dict[Tuple[str, str], str] = {
            tuple(e.ends): e.id for e in self.boundary_edges  # type: ignore
        }
        before: Dict[str, str] = {}
        after: Dict[str, str] = {}
        for component in self.boundary_points:
            for j, point in enumerate(component):
                prev: str = component[j - 1]
                nxt: str = component[(j + 1) % len(component)]
                if (prev, point) in by_ends:
                    before[point] = by_ends[(prev, point)]
                if (point, nxt) in by_ends:
                    after[point] = by_ends[(point, nxt)]
        return before, after

    def segment_before(self, point: str) -> str:
        try:
            return self._segments[0][point]
        except KeyError as exc:
            raise InvalidTriangulation(f"No boundary segment ends at {point}") from exc

    def segment_after(self, point: str) -> str:
        try:
            return self._segments[1][point]
        except KeyError as exc:
            raise InvalidTriangulation(f"No boundary segment starts at {point}") from exc

    def boundary_segments(self) -> Tuple[Tuple[str, ...], ...]:
        """Frozen vertices per component in anticlockwise order (segment before each point)"""
        return tuple(
            tuple(self.segment_before(p) for p in component)
            for component in self.boundary_points
        )

    def normalized(self) -> "Triangulation":
        """
        Canonical storage: arc ends in marked point order, each triangle
        rotated so its lowest-index side comes first, triangles sorted.
        """
        pidx: Dict[str, int] = self.point_index
        edges: List[Edge] = []
        for e in self.edges:
            if e.kind == ARC and pidx.get(e.ends[0], -1) > pidx.get(e.ends[1], -1):
                e = Edge(e.id, (e.ends[1], e.ends[0]), e.kind)
            edges.append(e)
        eidx: Dict[str, int] = {e.id: i for i, e in enumerate(edges)}
        big: int = len(edges) + 1

        def rank(tri: Triangle) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
            return (
                tuple(eidx.get(s, big) for s in tri.sides),
                tuple(pidx.get(c, -1) for c in tri.corners),
            )

        triangles: List[Triangle] = [
            min((tri.rotated(s) for s in range(3)), key=rank) for tri in self.triangles
        ]
        triangles.sort(key=rank)
        return Triangulation(
            self.signature,
            self.boundary_points,
            self.punctures,
            tuple(edges),
            tuple(triangles),
        )

    def to_json(self) -> TriangulationDocument:
        return TriangulationDocument(
            signature=self.signature.to_json(),
            marked_points=MarkedPointsDocument(
                boundary=[list(c) for c in self.boundary_points],
                punctures=list(self.punctures),
            ),
            edges=[EdgeDocument(id=e.id, ends=list(e.ends), kind=e.kind) for e in self.edges],
            triangles=[
                TriangleDocument(sides=list(t.sides), corners=list(t.corners))
                for t in self.triangles
            ],
        )

    @classmethod
    def from_json(cls, data: TriangulationDocument) -> "Triangulation":
        try:
            signature: SurfaceSignature = SurfaceSignature.from_json(data["signature"])
            marked: Mapping[str, Any] = data.get("marked_points", {})  # type: ignore
            boundary_points = [[str(p) for p in c] for c in marked.get("boundary", [])]
            punctures = [str(p) for p in marked.get("punctures", [])]
            edges: List[Edge] = [
                Edge(str(e["id"]), (str(e["ends"][0]), str(e["ends"][1])), str(e["kind"]))
                for e in data["edges"]
            ]
            ends: Dict[str, Tuple[str, str]] = {e.id: e.ends for e in edges}
            triangles: List[Triangle] = [
                _parse_triangle(entry, ends) for entry in data["triangles"]
            ]
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise InvalidTriangulation(f"Malformed triangulation document: {exc}") from exc
        return cls.build(signature, boundary_points, punctures, edges, triangles)


def _parse_triangle(entry: Any, ends: Mapping[str, Tuple[str, str]]) -> Triangle:
    if isinstance(entry, Mapping):
        sides = tuple(str(s) for s in entry["sides"])
        corners = entry.get("corners")
    else:
        sides = tuple(str(s) for s in entry)
        corners = None
    if len(sides) != 3:
        raise InvalidTriangulation(f"Triangle {list(sides)} does not have three sides")
    if corners is not None:
        if len(corners) != 3:
            raise InvalidTriangulation(f"Triangle {list(sides)} needs three corners")
        return Triangle(sides, tuple(str(c) for c in corners))  # type: ignore
    inferred: List[str] = []
    for j in range(3):
        first, second = sides[j], sides[(j + 1) % 3]
        if first not in ends or second not in ends:
            raise InvalidTriangulation(f"Triangle {list(sides)} uses an unknown edge")
        shared: Set[str] = set(ends[first]) & set(ends[second])
        if first == second or len(shared) != 1:
            raise InvalidTriangulation(
                f"Corner between {first} and {second} is ambiguous, give explicit corners"
            )
        inferred.append(shared.pop())
    return Triangle(sides, tuple(inferred))  # type: ignore


def validate_triangulation(T: Triangulation) -> List[Diagnostic]:
    diagnostics: List[Diagnostic] = []
    sig: SurfaceSignature = T.signature
    expected_arcs: Optional[int] = None
    try:
        expected_arcs = sig.arc_count()
    except DegenerateSurface as exc:
        diagnostics.append(Diagnostic("degenerate-surface", str(exc)))

    sizes: List[int] = [len(c) for c in T.boundary_points]
    if sizes != list(sig.boundary_marked):
        diagnostics.append(
            Diagnostic(
                "marked-points",
                f"boundary components carry {sizes} points, signature says "
                f"{list(sig.boundary_marked)}",
            )
        )
    if len(T.punctures) != sig.punctures:
        diagnostics.append(
            Diagnostic(
                "marked-points",
                f"{len(T.punctures)} punctures listed, signature says {sig.punctures}",
            )
        )
    for point, count in Counter(T.points).items():
        if count > 1:
            diagnostics.append(Diagnostic("marked-points", "listed twice", (point,)))

    known_points: FrozenSet[str] = frozenset(T.points)
    for edge_id, count in Counter(e.id for e in T.edges).items():
        if count > 1:
            diagnostics.append(Diagnostic("duplicate-edge", f"declared {count} times", (edge_id,)))
    for e in T.edges:
        if e.kind not in EDGE_KINDS:
            diagnostics.append(Diagnostic("edge-kind", f"unknown kind {e.kind!r}", (e.id,)))
        missing: List[str] = [p for p in e.ends if p not in known_points]
        if missing:
            diagnostics.append(
                Diagnostic("unknown-point", f"endpoint(s) {', '.join(missing)}", (e.id,))
            )

    boundary_ends: Counter = Counter(tuple(e.ends) for e in T.boundary_edges)
    consecutive: Set[Tuple[str, str]] = set()
    for component in T.boundary_points:
        for j, point in enumerate(component):
            pair: Tuple[str, str] = (component[j - 1], point)
            consecutive.add(pair)
            if boundary_ends.get(pair, 0) != 1:
                diagnostics.append(
                    Diagnostic(
                        "boundary-cycle",
                        f"expected one boundary segment {pair[0]} -> {pair[1]}, "
                        f"found {boundary_ends.get(pair, 0)}",
                        pair,
                    )
                )
    for e in T.boundary_edges:
        if tuple(e.ends) not in consecutive:
            diagnostics.append(
                Diagnostic("boundary-cycle", "segment joins non-consecutive points", (e.id,))
            )

    for e in T.edges:
        wanted: int = 1 if e.kind == BOUNDARY else 2
        found: int = len(T.slots.get(e.id, ()))
        if found != wanted:
            diagnostics.append(
                Diagnostic(
                    "slot-count",
                    f"{e.kind} occurs in {found} triangle slots, expected {wanted}",
                    (e.id,),
                )
            )
    for side in sorted(set(T.slots) - set(T.edge_map)):
        diagnostics.append(Diagnostic("unknown-edge", "triangle side is not an edge", (side,)))

    arcs: int = len(T.arcs)
    if expected_arcs is not None and arcs != expected_arcs:
        diagnostics.append(
            Diagnostic("arc-count", f"{arcs} arcs, the signature requires {expected_arcs}")
        )
    if 3 * len(T.triangles) != 2 * arcs + len(T.boundary_edges):
        diagnostics.append(
            Diagnostic(
                "triangle-count",
                f"{len(T.triangles)} triangles for {arcs} arcs and "
                f"{len(T.boundary_edges)} boundary segments",
            )
        )

    for t, tri in enumerate(T.triangles):
        for j in range(3):
            point: str = tri.corners[j]
            for side in (tri.sides[j], tri.sides[(j + 1) % 3]):
                edge: Optional[Edge] = T.edge_map.get(side)
                if edge is not None and point not in edge.ends:
                    diagnostics.append(
                        Diagnostic(
                            "corner",
                            f"corner {point} is not an endpoint of side {side}",
                            (f"triangle {t}",),
                        )
                    )
    return diagnostics


def ensure_valid(T: Triangulation) -> None:
    diagnostics: List[Diagnostic] = validate_triangulation(T)
    if diagnostics:
        raise InvalidTriangulation("Invalid triangulation", diagnostics)


def _check_supported(T: Triangulation) -> None:
    for e in T.arcs:
        if e.ends[0] == e.ends[1]:
            raise UnsupportedConfiguration(f"Loop arc {e.id} at {e.ends[0]} is not supported")
    for t, tri in enumerate(T.triangles):
        if len(set(tri.sides)) != 3:
            raise UnsupportedConfiguration(f"Triangle {t} is self-folded")


def load_triangulation(path: str) -> Triangulation:
    T: Triangulation = Triangulation.from_json(load_json(path))
    ensure_valid(T)
    return T


def corner_chain(T: Triangulation, point: str) -> List[Corner]:
    """
    Corners at a marked point in anticlockwise order. At a boundary point the
    chain runs from the segment after it to the segment before it; at a
    puncture it closes up.
    """
    at_point: List[Corner] = [c for c in T.corners if c.point == point]
    if not at_point:
        raise InvalidTriangulation(f"No triangle has a corner at {point}")
    if T.is_boundary_point(point):
        current: str = T.segment_after(point)
        stop: str = T.segment_before(point)
    else:
        current = at_point[0].incoming
        stop = current
    chain: List[Corner] = []
    used: Set[Tuple[int, int]] = set()
    while True:
        options: List[Corner] = [
            c for c in at_point if c.incoming == current and (c.triangle, c.index) not in used
        ]
        if len(options) != 1:
            raise InvalidTriangulation(
                f"Corners around {point} do not chain after side {current}"
            )
        corner: Corner = options[0]
        chain.append(corner)
        used.add((corner.triangle, corner.index))
        current = corner.outgoing
        if current == stop:
            break
    if len(chain) != len(at_point):
        raise InvalidTriangulation(f"Corners around {point} split into several chains")
    return chain


def corner_path(T: Triangulation, point: str) -> Word:
    return tuple(c.arrow_id for c in corner_chain(T, point))


def external_id(point: str) -> str:
    return f"Y{point}"


def _beyond(T: Triangulation, t: int, j: int) -> Tuple[int, bool]:
    """
    Boundary segments on the far side of side ``j`` of triangle ``t``
    (the side itself counts when it is a boundary segment), and whether
    a puncture lies there.
    """
    side: str = T.triangles[t].sides[j]
    if T.edge_map[side].kind == BOUNDARY:
        return 1, False
    others: List[Slot] = [s for s in T.slots[side] if s != (t, j)]
    start: int = others[0][0]
    seen: Set[int] = {start}
    stack: List[int] = [start]
    while stack:
        u: int = stack.pop()
        for s in T.triangles[u].sides:
            if s == side or T.edge_map[s].kind == BOUNDARY:
                continue
            for v, _ in T.slots[s]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
    if t in seen:
        raise UnsupportedConfiguration(f"Arc {side} does not cut the surface in two")
    count: int = sum(
        1 for u in seen for s in T.triangles[u].sides if T.edge_map[s].kind == BOUNDARY
    )
    punctured: bool = any(c in T.punctures for u in seen for c in T.triangles[u].corners)
    return count, punctured


def angle_grading(T: Triangulation) -> Dict[str, int]:
    """
    Arrow weights making every potential term homogeneous, read off the
    regular polygon (doubled for a punctured disk) as multiples of its
    smallest inscribed angle. Empty for surfaces other than disks with at
    most one puncture.
    """
    sig: SurfaceSignature = T.signature
    if sig.genus != 0 or sig.b != 1 or sig.punctures > 1:
        return {}
    m: int = sig.c
    total: int = m if sig.punctures == 0 else 2 * m
    weights: Dict[str, int] = {}
    for t, tri in enumerate(T.triangles):
        angles: List[int] = [0, 0, 0]
        at_puncture: List[int] = [j for j in range(3) if tri.corners[j] in T.punctures]
        if at_puncture:
            jo: int = at_puncture[0]
            k, _ = _beyond(T, t, (jo + 2) % 3)
            for j in range(3):
                angles[j] = 2 * k if j == jo else m - k
        else:
            info: List[Tuple[int, bool]] = [_beyond(T, t, (j + 2) % 3) for j in range(3)]
            facing: List[int] = [j for j in range(3) if info[j][1]]
            if len(facing) > 1:
                raise UnsupportedConfiguration(f"Triangle {t} faces several punctures")
            for j in range(3):
                if j not in facing:
                    angles[j] = info[j][0]
            if facing:
                angles[facing[0]] = total - sum(angles)
        if sum(angles) != total or min(angles) < 1:
            raise UnsupportedConfiguration(f"Triangle {t} has no consistent angle grading")
        for j in range(3):
            weights[f"t{t}_{j}"] = angles[j]
    for component in T.boundary_points:
        for point in component:
            weights[external_id(point)] = EXTERNAL_WEIGHT
    return weights


def build_ice_qp(
    T: Triangulation, variant: str = ALL_EXTERNAL, graded: bool = True
) -> IceQP:
    if variant not in QP_VARIANTS:
        raise ValueError(f"Unknown external arrow variant {variant!r}")
    ensure_valid(T)
    _check_supported(T)

    arrows: List[Arrow] = [Arrow(c.arrow_id, c.incoming, c.outgoing) for c in T.corners]
    touched: Set[str] = {p for e in T.arcs for p in e.ends}
    external: List[str] = []
    for component in T.boundary_points:
        for point in component:
            if variant == ALL_EXTERNAL or point in touched:
                name: str = external_id(point)
                arrows.append(Arrow(name, T.segment_before(point), T.segment_after(point)))
                external.append(name)
    quiver: Quiver = Quiver(
        vertices=tuple(e.id for e in T.edges),
        arrows=tuple(arrows),
        frozen=frozenset(e.id for e in T.boundary_edges),
    )

    cycles: List[Tuple[int, Word]] = []
    for t in range(len(T.triangles)):
        cycles.append((1, (f"t{t}_0", f"t{t}_1", f"t{t}_2")))
    for puncture in T.punctures:
        cycles.append((-1, corner_path(T, puncture)))
    for component in T.boundary_points:
        for point in component:
            if external_id(point) in external:
                cycles.append((-1, corner_path(T, point) + (external_id(point),)))
    potential: Potential = Potential.from_cycles(quiver, cycles)

    weights: Dict[str, int] = angle_grading(T) if graded else {}
    weights = {a: w for a, w in weights.items() if a in quiver.arrow_map}
    qp: IceQP = IceQP(quiver, potential, tuple(external), weights, T.boundary_segments())
    if potential.degree2_terms():
        qp, report = reduce(qp)
        logger.debug(f"Reduced surface potential, removed {report.removed_trivial_pairs}")
    logger.debug(
        f"Built ice QP: {len(quiver.vertices)} vertices, {len(qp.quiver.arrows)} arrows, "
        f"{len(qp.potential)} potential terms"
    )
    return qp


def _new_arc_id(T: Triangulation, x: str, y: str, replacing: str) -> Tuple[str, Tuple[str, str]]:
    lo, hi = sorted((x, y), key=lambda p: T.point_index[p])
    name: str = f"d{lo}_{hi}"
    taken: Set[str] = {e.id for e in T.edges if e.id != replacing}
    while name in taken:
        name += "'"
    return name, (lo, hi)


def flip(T: Triangulation, arc: str) -> Triangulation:
    edge: Edge = T.edge(arc)
    if edge.kind != ARC:
        raise NotAnArc(f"Edge {arc} is a boundary segment")
    slots: Tuple[Slot, ...] = T.slots.get(arc, ())
    if len(slots) != 2:
        raise InvalidTriangulation(f"Arc {arc} occurs in {len(slots)} triangle slots")
    (t1, j1), (t2, j2) = slots
    if t1 == t2:
        raise NotFlippable(f"Arc {arc} is glued to itself")
    first: Triangle = T.triangles[t1].rotated(j1)
    second: Triangle = T.triangles[t2].rotated(j2)
    _, s1, s2 = first.sides
    u, x, v = first.corners
    _, s3, s4 = second.sides
    v2, y, u2 = second.corners
    if len({s1, s2, s3, s4}) != 4 or arc in (s1, s2, s3, s4):
        raise NotFlippable(f"The quadrilateral around {arc} has repeated sides")
    if (u, v) != (u2, v2):
        raise InvalidTriangulation(f"Triangles around {arc} disagree on its endpoints")
    if x == y:
        raise NotFlippable(f"Flipping {arc} would create a loop arc at {x}")
    new_id, ends = _new_arc_id(T, x, y, arc)
    edges: List[Edge] = [Edge(new_id, ends, ARC) if e.id == arc else e for e in T.edges]
    triangles: List[Triangle] = list(T.triangles)
    triangles[t1] = Triangle((s2, s3, new_id), (v, y, x))
    triangles[t2] = Triangle((s4, s1, new_id), (u, x, y))
    logger.debug(f"Flipped {arc} into {new_id}")
    return Triangulation(
        T.signature, T.boundary_points, T.punctures, tuple(edges), tuple(triangles)
    ).normalized()


def new_arc(before: Triangulation, after: Triangulation, arc: str) -> str:
    """The arc that replaced ``arc`` in a flip"""
    return after.edges[before.edge_index[arc]].id


CanonicalKey = Tuple[Any, ...]


def canonical_key(T: Triangulation) -> CanonicalKey:
    """
    Relabel-invariant key: arcs are renamed in breadth-first order starting
    from the boundary segments, whose names are kept.
    """
    labels: Dict[str, str] = {e.id: e.id for e in T.boundary_edges}
    if not labels:
        raise UnsupportedConfiguration("Canonical keys need at least one boundary segment")
    queue: Deque[Slot] = deque()
    for component in T.boundary_segments():
        for segment in component:
            queue.extend(T.slots[segment])
    visited: Set[int] = set()
    while queue:
        t, j = queue.popleft()
        if t in visited:
            continue
        visited.add(t)
        tri: Triangle = T.triangles[t].rotated(j)
        for side in tri.sides:
            if side not in labels:
                labels[side] = f"#{len(labels)}"
        for side in tri.sides[1:]:
            for slot in T.slots[side]:
                if slot[0] not in visited:
                    queue.append(slot)
    entries: List[Tuple[Tuple[str, ...], Tuple[str, ...]]] = []
    for tri in T.triangles:
        rotations = [tri.rotated(s) for s in range(3)]
        entries.append(
            min((tuple(labels[x] for x in r.sides), r.corners) for r in rotations)
        )
    return tuple(sorted(entries))


@dataclass
class FlipOrbit:
    triangulations: List[Triangulation] = field(default_factory=list)
    graph: nx.Graph = field(default_factory=nx.Graph)
    overflow: bool = False

    def __len__(self) -> int:
        return len(self.triangulations)

    def flip_edges(self) -> List[Tuple[int, str, int]]:
        """``(source index, flipped arc, target index)`` for every flip edge"""
        return sorted(
            (data["source"], data["arc"], v if data["source"] == u else u)
            for u, v, data in self.graph.edges(data=True)
        )


def flip_orbit(T: Triangulation, max_size: int = 100) -> FlipOrbit:
    orbit: FlipOrbit = FlipOrbit()
    keys: Dict[CanonicalKey, int] = {canonical_key(T): 0}
    orbit.triangulations.append(T)
    orbit.graph.add_node(0)
    queue: Deque[int] = deque([0])
    while queue:
        index: int = queue.popleft()
        current: Triangulation = orbit.triangulations[index]
        for edge in current.arcs:
            try:
                flipped: Triangulation = flip(current, edge.id)
            except (NotFlippable, UnsupportedConfiguration):
                continue
            key: CanonicalKey = canonical_key(flipped)
            target: Optional[int] = keys.get(key)
            if target is None:
                if len(orbit.triangulations) >= max_size:
                    orbit.overflow = True
                    continue
                target = len(orbit.triangulations)
                keys[key] = target
                orbit.triangulations.append(flipped)
                orbit.graph.add_node(target)
                queue.append(target)
            if not orbit.graph.has_edge(index, target) and index != target:
                orbit.graph.add_edge(index, target, source=index, arc=edge.id)
    logger.info(
        f"Flip orbit: {len(orbit)} triangulations, {orbit.graph.number_of_edges()} flips"
        + (" (overflow)" if orbit.overflow else "")
    )
    return orbit
