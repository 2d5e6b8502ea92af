import itertools
import logging
import os
import time
from collections import defaultdict
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
    DefaultDict,
    Any,
    Hashable,
)

from sympy import Matrix, Rational as SymRational

from .algebra import (
    AlgebraElement,
    IceQP,
    Potential,
    NOT_BOTH_FROZEN,
    EXCLUDE_Y_ONLY,
    multiply,
    load_qp,
)
from .quiver import Quiver, Path
from .rewriting import (
    Relation,
    RewriteSystem,
    MonomialOrder,
    complete,
    jacobian_system,
    graded_table,
    normal_form,
)
from .surface import (
    Triangulation,
    Triangle,
    ALL_EXTERNAL,
    INCIDENT_ONLY,
    build_ice_qp,
    corner_path,
    external_id,
    flip,
    flip_orbit,
    new_arc,
    FlipOrbit,
)
from .utils import DEFAULT_DEGREE, Word, load_json, fmt_rational, fmt_elapsed


__all__ = [
    "BoundaryError",
    "OutOfRange",
    "EmptyBoundary",
    "BoundaryProfile",
    "Verdict",
    "Generator",
    "IsoWitness",
    "FlipLocalData",
    "OraclePresentation",
    "Presentation",
    "boundary_profile",
    "compare_profiles",
    "flip_witness",
    "identity_witness",
    "search_witness",
    "verify_witness",
    "polygon_oracle",
    "oracle_check",
    "orbit_check",
    "variant_agreement",
    "load_presentation",
    "check_presentation",
    "RELATION_CORRESPONDENCE",
]


logger: logging.Logger = logging.getLogger(__name__)


PASS: str = "pass"
FAIL: str = "fail"

EXPLICIT_FLIP: str = "explicit-flip"
SEARCH: str = "search"
IDENTITY: str = "identity"

# Relation (target side), relation (source side) it is sent to, and the sign between them
RELATION_CORRESPONDENCE: Tuple[Tuple[str, str, int], ...] = (
    ("e", "c", 1),
    ("e'", "a'", -1),
    ("f", "d", 1),
    ("f'", "b'", -1),
    ("g", "a", 1),
    ("g'", "c'", -1),
    ("h", "b", 1),
    ("h'", "d'", -1),
)


class BoundaryError(Exception):
    ...


class OutOfRange(BoundaryError):
    ...


class EmptyBoundary(BoundaryError):
    ...


Dims = Mapping[str, Mapping[str, Tuple[int, ...]]]


class ProfileDocument(TypedDict):
    frozen_vertices: List[str]
    components: List[List[str]]
    certificate_degree: int
    variant: Optional[str]
    dims: Dict[str, Dict[str, List[int]]]


class VerdictDocument(TypedDict, total=False):
    status: str
    certificate_degree: int
    bijection: Dict[str, str]
    first_discrepancy: List[Any]
    failed_condition: str
    detail: str
    witness: Dict[str, Any]


@dataclass(frozen=True)
class BoundaryProfile:
    """Graded dimensions of the boundary algebra between every pair of frozen vertices"""

    frozen_vertices: Tuple[str, ...]
    dims: Dims
    certificate_degree: int
    components: Tuple[Tuple[str, ...], ...] = ()
    variant: Optional[str] = None

    def counts(self, i: str, j: str) -> Tuple[int, ...]:
        return tuple(self.dims[i][j])

    def total(self, i: str, j: str, up_to: Optional[int] = None) -> int:
        counts: Tuple[int, ...] = self.counts(i, j)
        return sum(counts if up_to is None else counts[: up_to + 1])

    def to_json(self) -> ProfileDocument:
        return ProfileDocument(
            frozen_vertices=list(self.frozen_vertices),
            components=[list(c) for c in self.components],
            certificate_degree=self.certificate_degree,
            variant=self.variant,
            dims={i: {j: list(c) for j, c in row.items()} for i, row in self.dims.items()},
        )

    @classmethod
    def from_json(cls, data: ProfileDocument) -> "BoundaryProfile":
        return cls(
            frozen_vertices=tuple(data["frozen_vertices"]),
            dims={i: {j: tuple(c) for j, c in row.items()} for i, row in data["dims"].items()},
            certificate_degree=int(data["certificate_degree"]),
            components=tuple(tuple(c) for c in data.get("components", [])),
            variant=data.get("variant"),
        )


def _profile_from_system(
    rs: RewriteSystem,
    frozen: Sequence[str],
    components: Tuple[Tuple[str, ...], ...],
    N: int,
    variant: Optional[str],
) -> BoundaryProfile:
    table = graded_table(rs, frozen, frozen, N)
    return BoundaryProfile(
        tuple(frozen),
        {i: {j: tuple(table[i][j]) for j in frozen} for i in frozen},
        N,
        components,
        variant,
    )


def boundary_profile(
    qp: IceQP,
    N: int = DEFAULT_DEGREE,
    variant: Optional[str] = None,
    order: Optional[MonomialOrder] = None,
    system: Optional[RewriteSystem] = None,
) -> BoundaryProfile:
    if not qp.frozen_vertices:
        raise EmptyBoundary("The boundary algebra of a QP without frozen vertices is zero")
    rs: RewriteSystem = system or jacobian_system(qp, N, variant, order)
    return _profile_from_system(
        rs, qp.frozen_vertices, qp.boundary_components, N, variant or qp.default_variant
    )


@dataclass
class Verdict:
    status: str
    certificate_degree: int
    bijection: Optional[Dict[str, str]] = None
    first_discrepancy: Optional[Tuple[str, str, int]] = None
    failed_condition: Optional[str] = None
    detail: str = ""
    witness: Optional["IsoWitness"] = None

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def __str__(self) -> str:
        text: str = f"{self.status} (degree {self.certificate_degree})"
        if self.failed_condition:
            text += f", failed {self.failed_condition}"
        if self.first_discrepancy:
            i, j, d = self.first_discrepancy
            text += f", first discrepancy at {i} -> {j}, degree {d}"
        return text + (f": {self.detail}" if self.detail else "")

    def to_json(self) -> VerdictDocument:
        document: VerdictDocument = VerdictDocument(
            status=self.status, certificate_degree=self.certificate_degree
        )
        if self.bijection is not None:
            document["bijection"] = dict(self.bijection)
        if self.first_discrepancy is not None:
            document["first_discrepancy"] = list(self.first_discrepancy)
        if self.failed_condition is not None:
            document["failed_condition"] = self.failed_condition
        if self.detail:
            document["detail"] = self.detail
        if self.witness is not None:
            document["witness"] = self.witness.to_json()  # type: ignore
        return document


def _cyclic_maps(
    a: Sequence[str], b: Sequence[str], reflections: bool = True
) -> Iterator[Dict[str, str]]:
    """Rotations first, then reflections"""
    m: int = len(a)
    for reflect in (False, True) if reflections and m > 2 else (False,):
        for shift in range(m):
            yield {
                a[t]: b[(shift - t) % m if reflect else (shift + t) % m] for t in range(m)
            }


def boundary_bijections(
    a: Sequence[Sequence[str]], b: Sequence[Sequence[str]], reflections: bool = True
) -> Iterator[Dict[str, str]]:
    """Bijections between frozen vertices preserving components and cyclic order"""
    if sorted(len(c) for c in a) != sorted(len(c) for c in b):
        return
    for permutation in itertools.permutations(range(len(b))):
        if any(len(a[k]) != len(b[permutation[k]]) for k in range(len(a))):
            continue
        choices: List[List[Dict[str, str]]] = [
            list(_cyclic_maps(a[k], b[permutation[k]], reflections)) for k in range(len(a))
        ]
        for combination in itertools.product(*choices):
            merged: Dict[str, str] = {}
            for part in combination:
                merged.update(part)
            yield merged


def _first_mismatch(
    a: BoundaryProfile, b: BoundaryProfile, bijection: Mapping[str, str], N: int
) -> Optional[Tuple[str, str, int]]:
    for i in a.frozen_vertices:
        for j in a.frozen_vertices:
            left: Tuple[int, ...] = a.counts(i, j)
            right: Tuple[int, ...] = b.counts(bijection[i], bijection[j])
            for d in range(N + 1):
                if left[d] != right[d]:
                    return i, j, d
    return None


def compare_profiles(
    a: BoundaryProfile, b: BoundaryProfile, bijection: Optional[Mapping[str, str]] = None
) -> Verdict:
    """
    Look for a boundary-preserving bijection equating the two dims tables,
    up to the smaller certificate degree. The identity-like candidate is
    tried first and gives the reported discrepancy on failure.
    """
    N: int = min(a.certificate_degree, b.certificate_degree)
    if len(a.frozen_vertices) != len(b.frozen_vertices):
        return Verdict(
            FAIL,
            N,
            failed_condition="frozen-count",
            detail=f"{len(a.frozen_vertices)} frozen vertices against {len(b.frozen_vertices)}",
        )
    candidates: Iterator[Dict[str, str]]
    if bijection is not None:
        candidates = iter([dict(bijection)])
    else:
        candidates = boundary_bijections(
            a.components or (a.frozen_vertices,), b.components or (b.frozen_vertices,)
        )
    first: Optional[Tuple[str, str, int]] = None
    tried: int = 0
    for candidate in candidates:
        tried += 1
        mismatch: Optional[Tuple[str, str, int]] = _first_mismatch(a, b, candidate, N)
        if mismatch is None:
            return Verdict(PASS, N, bijection=candidate, detail=f"equal up to degree {N}")
        if first is None:
            first = mismatch
    if not tried:
        return Verdict(
            FAIL, N, failed_condition="boundary-structure", detail="boundary components differ"
        )
    return Verdict(
        FAIL,
        N,
        first_discrepancy=first,
        failed_condition="dims",
        detail=f"no boundary bijection among {tried} equates the profiles",
    )


@dataclass(frozen=True)
class Generator:
    name: str
    source: AlgebraElement
    image: AlgebraElement

    @staticmethod
    def _ends(element: AlgebraElement, name: str) -> Tuple[str, str]:
        ends = element.endpoints()
        if len(ends) != 1:
            raise BoundaryError(f"Generator {name} is not homogeneous in its endpoints")
        return next(iter(ends))

    @property
    def source_ends(self) -> Tuple[str, str]:
        return self._ends(self.source, self.name)

    @property
    def image_ends(self) -> Tuple[str, str]:
        return self._ends(self.image, self.name)


@dataclass
class FlipLocalData:
    """
    The quadrilateral of a flip: named arrows, the sixteen local relations and
    the flip map. ``images`` sends every target arrow away from the new arc,
    and every passage through it (a pair of arrows), to a source element.
    ``shortcuts`` replaces the two source passages through the old arc that
    the flip cancels by the rest of their cycles.
    """

    arc: str
    new_arc: str
    labels: Dict[str, str]
    src_relations: Dict[str, AlgebraElement]
    dst_relations: Dict[str, AlgebraElement]
    images: Dict[Word, AlgebraElement] = field(default_factory=dict)
    shortcuts: Dict[Word, AlgebraElement] = field(default_factory=dict)
    correspondence: Tuple[Tuple[str, str, int], ...] = RELATION_CORRESPONDENCE

    def transport(self, element: AlgebraElement, src: IceQP) -> AlgebraElement:
        """The flip map applied to a target element"""
        result: AlgebraElement = AlgebraElement.zero(src.quiver)
        for path, coeff in element.terms.items():
            if self.new_arc in (path.source, path.target):
                raise BoundaryError(f"Path {path} has an end at the new arc {self.new_arc}")
            image: AlgebraElement = AlgebraElement.from_path(
                src.quiver, Path.trivial(path.source), coeff
            )
            word: Word = path.arrows
            i: int = 0
            while i < len(word):
                if word[i : i + 1] in self.images:
                    piece: AlgebraElement = self.images[word[i : i + 1]]
                    i += 1
                elif word[i : i + 2] in self.images:
                    piece = self.images[word[i : i + 2]]
                    i += 2
                else:
                    raise BoundaryError(f"Path {path} has no image past {word[i]}")
                image = multiply(image, piece)
            result = result + image
        return result

    def shortcut(self, element: AlgebraElement) -> AlgebraElement:
        result: AlgebraElement = AlgebraElement.zero(element.quiver)
        for path, coeff in element.terms.items():
            image: AlgebraElement = AlgebraElement.from_path(
                element.quiver, Path.trivial(path.source), coeff
            )
            word: Word = path.arrows
            i: int = 0
            while i < len(word):
                if word[i : i + 2] in self.shortcuts:
                    image = multiply(image, self.shortcuts[word[i : i + 2]])
                    i += 2
                else:
                    image = multiply(
                        image,
                        AlgebraElement.from_path(element.quiver, element.quiver.path(word[i : i + 1])),
                    )
                    i += 1
            result = result + image
        return result

    def mismatches(self, src: IceQP) -> List[str]:
        """Correspondence pairs whose target relation is not sent to its source relation"""
        wrong: List[str] = []
        for dst_name, src_name, sign in self.correspondence:
            label: str = f"({dst_name}) -> {'-' if sign < 0 else ''}({src_name})"
            try:
                image: AlgebraElement = self.transport(self.dst_relations[dst_name], src)
            except BoundaryError as exc:
                logger.debug(f"Relation ({dst_name}): {exc}")
                wrong.append(label)
                continue
            expected: AlgebraElement = self.src_relations[src_name].scale(sign)
            if not self.shortcut(image - expected).is_zero:
                wrong.append(label)
        return wrong

    def to_json(self) -> Dict[str, Any]:
        return {
            "arc": self.arc,
            "new_arc": self.new_arc,
            "labels": dict(self.labels),
            "src_relations": {k: str(v) for k, v in self.src_relations.items()},
            "dst_relations": {k: str(v) for k, v in self.dst_relations.items()},
            "images": {".".join(k): str(v) for k, v in self.images.items()},
            "shortcuts": {".".join(k): str(v) for k, v in self.shortcuts.items()},
            "correspondence": [list(entry) for entry in self.correspondence],
        }


def _element_key(element: AlgebraElement) -> Hashable:
    return frozenset((p.source, p.target, p.arrows, c) for p, c in element.terms.items())


@dataclass
class IsoWitness:
    vertex_bijection: Dict[str, str]
    generators: List[Generator]
    provenance: str
    local: Optional[FlipLocalData] = None

    @property
    def generator_map(self) -> Dict[str, AlgebraElement]:
        return {g.name: g.image for g in self.generators}

    def compose(self, other: "IsoWitness") -> "IsoWitness":
        """``other`` after ``self``, matching generators by name"""
        by_name: Dict[str, Generator] = {g.name: g for g in other.generators}
        composed: List[Generator] = []
        for g in self.generators:
            follow: Optional[Generator] = by_name.get(g.name)
            if follow is None:
                raise BoundaryError(f"Generator {g.name} has no continuation")
            if _element_key(follow.source) != _element_key(g.image):
                raise BoundaryError(
                    f"Generator {g.name} maps to {g.image}, continuation starts at {follow.source}"
                )
            composed.append(Generator(g.name, g.source, follow.image))
        return IsoWitness(
            {v: other.vertex_bijection[w] for v, w in self.vertex_bijection.items()},
            composed,
            self.provenance if self.provenance == other.provenance else SEARCH,
        )

    def is_identity(self) -> bool:
        return all(v == w for v, w in self.vertex_bijection.items()) and all(
            _element_key(g.source) == _element_key(g.image) for g in self.generators
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "provenance": self.provenance,
            "vertex_bijection": dict(self.vertex_bijection),
            "generators": [
                {"name": g.name, "source": str(g.source), "image": str(g.image)}
                for g in self.generators
            ],
            "local": self.local.to_json() if self.local is not None else None,
        }


def _path_element(qp: IceQP, word: Word) -> AlgebraElement:
    return AlgebraElement.from_path(qp.quiver, qp.quiver.path(word))


def _surface_generators(T: Triangulation, qp: IceQP) -> Dict[str, AlgebraElement]:
    """
    ``x<P>`` runs through the interior at each boundary point P, ``y<P>`` is
    its external arrow. On components with three or more points ``z<P>``
    joins the ends of ``x<P>`` the other way round, along external arrows.
    """
    generators: Dict[str, AlgebraElement] = {}
    for component in T.boundary_points:
        c: int = len(component)
        for index, point in enumerate(component):
            generators[f"x{point}"] = _path_element(qp, corner_path(T, point))
            if external_id(point) in qp.quiver.arrow_map:
                generators[f"y{point}"] = _path_element(qp, (external_id(point),))
            around: Word = tuple(external_id(component[(index + s) % c]) for s in range(1, c))
            if c > 2 and all(a in qp.quiver.arrow_map for a in around):
                generators[f"z{point}"] = _path_element(qp, around)
    return generators


def _local_flip_data(
    T: Triangulation, T2: Triangulation, arc: str, src: IceQP, dst: IceQP
) -> Optional[FlipLocalData]:
    """
    Corners of the quadrilateral are A, B, C, D with the old arc joining A
    and C, sides s1 = AB, s2 = BC, s3 = CD, s4 = DA. None when two corners
    coincide or the surface potential had to be reduced.
    """
    (t1, j1), (t2, j2) = T.slots[arc]
    k2: str = new_arc(T, T2, arc)
    first = T.triangles[t1].rotated(j1)
    second = T.triangles[t2].rotated(j2)
    _, s1, s2 = first.sides
    _, s3, s4 = second.sides
    if len({*first.corners, *second.corners}) != 4:
        logger.debug(f"Flip of {arc}: the quadrilateral has repeated corners, no local data")
        return None
    if any(c.arrow_id not in src.quiver.arrow_map for c in T.corners) or any(
        c.arrow_id not in dst.quiver.arrow_map for c in T2.corners
    ):
        logger.debug(f"Flip of {arc}: quadrilateral arrows were reduced away, no local data")
        return None

    def around(t: int, j: int) -> Tuple[str, str, str]:
        """Arrows out of the side in slot j, across the opposite corner, and back into it"""
        return f"t{t}_{j}", f"t{t}_{(j + 1) % 3}", f"t{t}_{(j + 2) % 3}"

    L: Dict[str, str] = {}
    L["v1"], L["x4"], L["u3"] = around(t1, j1)
    L["v3"], L["x2"], L["u1"] = around(t2, j2)
    for t, j in T2.slots[k2]:
        out, across, back = around(t, j)
        if T2.triangles[t].sides[(j + 1) % 3] == s2:
            L["z2"], L["x3*"], L["w3"] = out, across, back
        else:
            L["z4"], L["x1*"], L["w1"] = out, across, back
    kept: Dict[Triangle, int] = {
        tri: t for t, tri in enumerate(T.triangles) if t not in (t1, t2)
    }
    touched: List[int] = [t for t, _ in T2.slots[k2]]

    def right(qp: IceQP, a: str, b: str) -> AlgebraElement:
        """a . d(b)"""
        return multiply(_path_element(qp, (a,)), qp.potential.cyclic_derivative(b))

    def left(qp: IceQP, a: str, b: str) -> AlgebraElement:
        """d(a) . b"""
        return multiply(qp.potential.cyclic_derivative(a), _path_element(qp, (b,)))

    def rest(qp: IceQP, across: str, pair: Word) -> Optional[AlgebraElement]:
        """The cycle at a corner minus the passage ``pair``, read off d(across)"""
        passage: AlgebraElement = _path_element(qp, pair)
        derivative: AlgebraElement = qp.potential.cyclic_derivative(across)
        if derivative.terms.get(qp.quiver.path(pair)) != 1:
            return None
        return passage - derivative

    images: Dict[Word, AlgebraElement] = {}
    for t, triangle in enumerate(T2.triangles):
        if t in touched:
            continue
        if triangle not in kept:
            logger.debug(f"Flip of {arc}: triangle {t} has no counterpart, no local data")
            return None
        for j in range(3):
            images[(f"t{t}_{j}",)] = _path_element(src, (f"t{kept[triangle]}_{j}",))
    for name in src.external:
        if name in dst.quiver.arrow_map:
            images[(name,)] = _path_element(src, (name,))
    images[(L["x1*"],)] = _path_element(src, (L["u1"], L["v1"]))
    images[(L["x3*"],)] = _path_element(src, (L["u3"], L["v3"]))
    images[(L["w1"], L["z2"])] = _path_element(src, (L["x4"],))
    images[(L["w3"], L["z4"])] = _path_element(src, (L["x2"],))
    local: FlipLocalData = FlipLocalData(arc, k2, L, {}, {}, images)
    at_a: Optional[AlgebraElement] = rest(dst, L["x1*"], (L["w1"], L["z4"]))
    at_c: Optional[AlgebraElement] = rest(dst, L["x3*"], (L["w3"], L["z2"]))
    at_b: Optional[AlgebraElement] = rest(src, L["x4"], (L["u3"], L["v1"]))
    at_d: Optional[AlgebraElement] = rest(src, L["x2"], (L["u1"], L["v3"]))
    if at_a is None or at_b is None or at_c is None or at_d is None:
        logger.debug(f"Flip of {arc}: corner cycles are not in surface form, no local data")
        return None
    try:
        images[(L["w1"], L["z4"])] = local.transport(at_a, src)
        images[(L["w3"], L["z2"])] = local.transport(at_c, src)
    except BoundaryError as exc:
        logger.debug(f"Flip of {arc}: {exc}, no local data")
        return None
    local.shortcuts = {(L["u3"], L["v1"]): at_b, (L["u1"], L["v3"]): at_d}

    local.src_relations = {
        "a": right(src, L["u3"], L["u1"]),
        "a'": right(src, L["u1"], L["u1"]),
        "b": left(src, L["v1"], L["v3"]),
        "b'": left(src, L["v1"], L["v1"]),
        "c": right(src, L["u1"], L["u3"]),
        "c'": right(src, L["u3"], L["u3"]),
        "d": left(src, L["v3"], L["v1"]),
        "d'": left(src, L["v3"], L["v3"]),
    }
    local.dst_relations = {
        "e": left(dst, L["z4"], L["z2"]),
        "e'": left(dst, L["z4"], L["z4"]),
        "f": right(dst, L["w3"], L["w1"]),
        "f'": right(dst, L["w1"], L["w1"]),
        "g": left(dst, L["z2"], L["z4"]),
        "g'": left(dst, L["z2"], L["z2"]),
        "h": right(dst, L["w1"], L["w3"]),
        "h'": right(dst, L["w3"], L["w3"]),
    }
    return local


def flip_witness(T: Triangulation, k: str) -> IsoWitness:
    return flip_pair(T, k)[2]


def flip_pair(T: Triangulation, k: str) -> Tuple[IceQP, IceQP, IsoWitness, Triangulation]:
    """Both surface QPs of a flip together with the explicit witness between them"""
    T2: Triangulation = flip(T, k)
    src: IceQP = build_ice_qp(T, ALL_EXTERNAL)
    dst: IceQP = build_ice_qp(T2, ALL_EXTERNAL)
    src_gens: Dict[str, AlgebraElement] = _surface_generators(T, src)
    dst_gens: Dict[str, AlgebraElement] = _surface_generators(T2, dst)
    generators: List[Generator] = [
        Generator(name, element, dst_gens[name]) for name, element in src_gens.items()
    ]
    bijection: Dict[str, str] = {v: v for v in src.frozen_vertices}
    witness: IsoWitness = IsoWitness(
        bijection, generators, EXPLICIT_FLIP, _local_flip_data(T, T2, k, src, dst)
    )
    return src, dst, witness, T2


def identity_witness(qp: IceQP, N: int = DEFAULT_DEGREE, system: Optional[RewriteSystem] = None) -> IsoWitness:
    """Generators are the normal-form boundary paths not passing through a frozen vertex"""
    rs: RewriteSystem = system or jacobian_system(qp, N)
    generators: List[Generator] = []
    for vertex in qp.frozen_vertices:
        stack: List[Tuple[Word, str, int]] = [((), vertex, 0)]
        while stack:
            word, end, degree = stack.pop()
            for arrow in qp.quiver.outgoing(end):
                extended_degree: int = degree + rs.order.weight(arrow.id)
                extended: Word = word + (arrow.id,)
                if extended_degree > N or not rs.is_irreducible(extended):
                    continue
                if qp.quiver.is_frozen(arrow.tgt):
                    element: AlgebraElement = _path_element(qp, extended)
                    generators.append(Generator(".".join(extended), element, element))
                else:
                    stack.append((extended, arrow.tgt, extended_degree))
    return IsoWitness({v: v for v in qp.frozen_vertices}, generators, IDENTITY)


def search_witness(T1: Triangulation, T2: Triangulation, N: int = DEFAULT_DEGREE) -> Verdict:
    """
    Try the boundary rotations between two triangulations of the same surface,
    mapping ``x<P>``/``y<P>`` generators along; the first verified one wins.
    """
    src: IceQP = build_ice_qp(T1, ALL_EXTERNAL)
    dst: IceQP = build_ice_qp(T2, ALL_EXTERNAL)
    src_rs: RewriteSystem = jacobian_system(src, N)
    dst_rs: RewriteSystem = jacobian_system(dst, N)
    src_gens = _surface_generators(T1, src)
    dst_gens = _surface_generators(T2, dst)
    last: Optional[Verdict] = None
    for points in boundary_bijections(T1.boundary_points, T2.boundary_points, reflections=False):
        bijection: Dict[str, str] = {
            T1.segment_before(p): T2.segment_before(q) for p, q in points.items()
        }
        generators: List[Generator] = []
        for name, element in src_gens.items():
            image: Optional[AlgebraElement] = dst_gens.get(name[0] + points[name[1:]])
            if image is None:
                break
            generators.append(Generator(name, element, image))
        else:
            witness = IsoWitness(bijection, generators, SEARCH)
            last = verify_witness(witness, src, dst, N, src_system=src_rs, dst_system=dst_rs)
            if last.passed:
                return last
    return last or Verdict(FAIL, N, failed_condition="boundary-structure")


def _sym(value: Fraction) -> SymRational:
    return SymRational(value.numerator, value.denominator)


def _fraction(value: Any) -> Fraction:
    return Fraction(int(value.p), int(value.q))


def _matrix(columns: Sequence[Mapping[Hashable, Fraction]]) -> Optional[Matrix]:
    basis: List[Hashable] = sorted({k for c in columns for k in c}, key=repr)
    if not basis or not columns:
        return None
    index: Dict[Hashable, int] = {k: r for r, k in enumerate(basis)}
    rows: List[List[SymRational]] = [[SymRational(0)] * len(columns) for _ in basis]
    for c, column in enumerate(columns):
        for key, value in column.items():
            rows[index[key]][c] = _sym(value)
    return Matrix(rows)


def _rank(columns: Sequence[Mapping[Hashable, Fraction]]) -> int:
    matrix: Optional[Matrix] = _matrix(columns)
    return 0 if matrix is None else matrix.rank()


def _dependencies(columns: Sequence[Mapping[Hashable, Fraction]]) -> List[List[Fraction]]:
    matrix: Optional[Matrix] = _matrix(columns)
    if matrix is None:
        return [[Fraction(int(r == c)) for r in range(len(columns))] for c in range(len(columns))]
    return [[_fraction(x) for x in vector] for vector in matrix.nullspace()]


def _within(element: AlgebraElement, rs: RewriteSystem) -> bool:
    return all(rs.order.degree(p.arrows) <= rs.confluent_up_to for p in element.terms)


def _terms_key(element: AlgebraElement, tag: str) -> Dict[Hashable, Fraction]:
    return {(tag, p.source, p.target, p.arrows): c for p, c in element.terms.items()}


@dataclass
class _GeneratorWord:
    names: Tuple[str, ...]
    source: AlgebraElement
    image: AlgebraElement
    source_degree: int
    image_degree: int

    def __str__(self) -> str:
        return ".".join(self.names) or "e"


def _generator_words(
    witness: IsoWitness, src: IceQP, dst: IceQP, src_rs: RewriteSystem, dst_rs: RewriteSystem, N: int
) -> DefaultDict[Tuple[str, str], List[_GeneratorWord]]:
    outgoing: DefaultDict[str, List[Generator]] = defaultdict(list)
    for g in witness.generators:
        outgoing[g.source_ends[0]].append(g)
    degree = lambda element, rs: max(rs.order.degree(p.arrows) for p in element.terms)  # noqa: E731
    words: DefaultDict[Tuple[str, str], List[_GeneratorWord]] = defaultdict(list)
    for vertex in src.frozen_vertices:
        start: _GeneratorWord = _GeneratorWord(
            (),
            AlgebraElement.from_path(src.quiver, Path.trivial(vertex)),
            AlgebraElement.from_path(dst.quiver, Path.trivial(witness.vertex_bijection[vertex])),
            0,
            0,
        )
        stack: List[Tuple[_GeneratorWord, str]] = [(start, vertex)]
        while stack:
            word, end = stack.pop()
            words[(vertex, end)].append(word)
            for g in outgoing[end]:
                image_degree: int = word.image_degree + degree(g.image, dst_rs)
                if image_degree > N:
                    continue
                stack.append(
                    (
                        _GeneratorWord(
                            word.names + (g.name,),
                            multiply(word.source, g.source),
                            multiply(word.image, g.image),
                            word.source_degree + degree(g.source, src_rs),
                            image_degree,
                        ),
                        g.source_ends[1],
                    )
                )
    return words


def verify_witness(
    w: IsoWitness,
    src: IceQP,
    dst: IceQP,
    N: int = DEFAULT_DEGREE,
    variant: Optional[str] = None,
    src_system: Optional[RewriteSystem] = None,
    dst_system: Optional[RewriteSystem] = None,
) -> Verdict:
    """
    Certify a witness up to degree N: (i) relations among generator words in
    the source map to zero, (ii) the images span every normal-form boundary
    path of the target, (iii) the graded dimensions agree. Flip witnesses
    also have their local relations checked.
    """
    started: float = time.monotonic()
    src_rs: RewriteSystem = src_system or jacobian_system(src, N, variant)
    dst_rs: RewriteSystem = dst_system or jacobian_system(dst, N, variant)
    src_profile: BoundaryProfile = boundary_profile(src, N, variant, system=src_rs)
    dst_profile: BoundaryProfile = boundary_profile(dst, N, variant, system=dst_rs)
    bijection: Dict[str, str] = w.vertex_bijection

    def fail(condition: str, detail: str, where: Optional[Tuple[str, str, int]] = None) -> Verdict:
        logger.debug(f"Witness rejected at {condition}: {detail}")
        return Verdict(FAIL, N, bijection, where, condition, detail, w)

    if sorted(bijection) != sorted(src.frozen_vertices) or sorted(
        bijection.values()
    ) != sorted(dst.frozen_vertices):
        return fail("(i)", "vertex map is not a bijection of frozen vertices")
    for g in w.generators:
        a, b = g.source_ends
        if g.image_ends != (bijection[a], bijection[b]):
            return fail(
                "(i)",
                f"generator {g.name} runs {a} -> {b} but its image runs "
                f"{g.image_ends[0]} -> {g.image_ends[1]}",
            )

    words = _generator_words(w, src, dst, src_rs, dst_rs, N)
    for (i, j), entries in sorted(words.items()):
        checked: List[_GeneratorWord] = [e for e in entries if e.source_degree <= N]
        sources = [_terms_key(normal_form(e.source, src_rs), "s") for e in checked]
        images = [_terms_key(normal_form(e.image, dst_rs), "d") for e in checked]
        stacked = [{**s, **d} for s, d in zip(sources, images)]
        if _rank(stacked) != _rank(sources):
            for vector in _dependencies(sources):
                combination: Dict[Hashable, Fraction] = {}
                for coeff, image in zip(vector, images):
                    for key, value in image.items():
                        combination[key] = combination.get(key, Fraction(0)) + coeff * value
                if any(combination.values()):
                    relation: str = " + ".join(
                        f"{fmt_rational(c)}*{e}" for c, e in zip(vector, checked) if c
                    )
                    return fail(
                        "(i)",
                        f"relation {relation} holds between {i} and {j} in the source "
                        f"but its image is nonzero",
                        (i, j, max(e.source_degree for e, c in zip(checked, vector) if c)),
                    )

    for i in src.frozen_vertices:
        for j in src.frozen_vertices:
            di, dj = bijection[i], bijection[j]
            entries = words.get((i, j), [])
            images = [_terms_key(normal_form(e.image, dst_rs), "d") for e in entries]
            expected: int = dst_profile.total(di, dj)
            if _rank(images) < expected:
                cumulative: int = 0
                for d in range(N + 1):
                    cumulative += dst_profile.counts(di, dj)[d]
                    reached = [im for im, e in zip(images, entries) if e.image_degree <= d]
                    if _rank(reached) < cumulative:
                        return fail(
                            "(ii)",
                            f"images do not span the paths {di} -> {dj} up to degree {d}",
                            (i, j, d),
                        )
                return fail("(ii)", f"images do not span the paths {di} -> {dj}", (i, j, N))

    mismatch: Optional[Tuple[str, str, int]] = _first_mismatch(src_profile, dst_profile, bijection, N)
    if mismatch is not None:
        return fail("(iii)", "graded dimensions differ", mismatch)

    if w.local is not None:
        for side, relations, rs in (
            ("source", w.local.src_relations, src_rs),
            ("target", w.local.dst_relations, dst_rs),
        ):
            for name, element in relations.items():
                # Beyond the certificate nothing can be said
                if not _within(element, rs):
                    continue
                if not normal_form(element, rs).is_zero:
                    return fail("local", f"{side} relation ({name}) is not in the ideal")
        wrong: List[str] = w.local.mismatches(src)
        if wrong:
            return fail("local", f"the flip map does not send {', '.join(wrong)}")

    logger.debug(f"Witness verified up to degree {N} in {fmt_elapsed(time.monotonic() - started)}")
    return Verdict(PASS, N, bijection, detail="witness verified", witness=w)


@dataclass
class OraclePresentation:
    quiver: Quiver
    relations: List[Relation]
    weights: Dict[str, int]
    n: int
    p: int


def polygon_oracle(
    n: int, p: int, N: int = DEFAULT_DEGREE
) -> Tuple[OraclePresentation, BoundaryProfile]:
    """
    The doubled cycle on n + 3 vertices with arrows y_i: i -> i+1 and
    x_i: i+1 -> i, with x_i y_i = y_{i+1} x_{i+1} and
    x_i x_{i-1} = (x_i ... x_{i+1-p}) (y_{i-p+1} ... y_{i+n+1}).
    """
    if n < 1:
        raise OutOfRange(f"The polygon needs n >= 1, got {n}")
    if p not in (0, 1, 2):
        raise OutOfRange(f"Only 0, 1 or 2 punctures are supported, got {p}")
    m: int = n + 3
    vertex = lambda i: str((i - 1) % m + 1)  # noqa: E731
    x = lambda i: f"x{vertex(i)}"  # noqa: E731
    y = lambda i: f"y{vertex(i)}"  # noqa: E731
    edges: List[Tuple[str, str, str]] = [(x(i), vertex(i + 1), vertex(i)) for i in range(1, m + 1)]
    edges += [(y(i), vertex(i), vertex(i + 1)) for i in range(1, m + 1)]
    quiver: Quiver = Quiver.from_edges(
        [vertex(i) for i in range(1, m + 1)], edges, frozen=[vertex(i) for i in range(1, m + 1)]
    )
    x_weight: int = {0: n + 1, 1: 2 * (n + 2), 2: 2 * (n + 3)}[p]
    weights: Dict[str, int] = {x(i): x_weight for i in range(1, m + 1)}
    weights.update({y(i): 2 for i in range(1, m + 1)})

    relations: List[Relation] = []
    for i in range(1, m + 1):
        commute = AlgebraElement.from_words(
            quiver, [(1, (x(i), y(i))), (-1, (y(i + 1), x(i + 1)))]
        )
        relations.append(Relation(commute, None, f"xy{vertex(i)}"))
        product: Word = tuple(x(i + 1 - k) for k in range(1, p + 1))
        product += tuple(y(i - p + k) for k in range(1, n + p + 2))
        square = AlgebraElement.from_words(quiver, [(1, (x(i), x(i - 1))), (-1, product)])
        relations.append(Relation(square, None, f"xx{vertex(i)}"))

    presentation: OraclePresentation = OraclePresentation(quiver, relations, weights, n, p)
    qp: IceQP = IceQP(quiver, Potential(quiver, {}), (), weights, (tuple(quiver.vertices),))
    rs: RewriteSystem = complete(relations, MonomialOrder.for_qp(qp), N, quiver=quiver)
    profile: BoundaryProfile = _profile_from_system(
        rs, quiver.vertices, (tuple(quiver.vertices),), N, None
    )
    return presentation, profile


def oracle_check(T: Triangulation, n: int, p: int, N: int = DEFAULT_DEGREE) -> Verdict:
    """Compare a polygon triangulation's boundary profile with the oracle's"""
    _, expected = polygon_oracle(n, p, N)
    qp: IceQP = build_ice_qp(T, ALL_EXTERNAL)
    return compare_profiles(expected, boundary_profile(qp, N))


@dataclass
class OrbitReport:
    size: int
    overflow: bool
    certificate_degree: int
    profiles: List[Verdict] = field(default_factory=list)
    witnesses: List[Tuple[int, str, Verdict]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.profiles) and all(
            v.passed for _, _, v in self.witnesses
        )

    def summary(self) -> str:
        profiles_ok: bool = all(v.passed for v in self.profiles)
        witnesses_ok: bool = all(v.passed for _, _, v in self.witnesses)
        return (
            f"{self.size} triangulations{' (overflow)' if self.overflow else ''}, "
            f"{'all profiles equal' if profiles_ok else 'profiles differ'}, "
            f"{'all witnesses verified' if witnesses_ok else 'witness failures'}"
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "status": PASS if self.passed else FAIL,
            "certificate_degree": self.certificate_degree,
            "summary": self.summary(),
            "size": self.size,
            "overflow": self.overflow,
            "profiles": [v.to_json() for v in self.profiles],
            "witnesses": [
                {"source": s, "arc": a, **{k: v for k, v in verdict.to_json().items() if k != "witness"}}
                for s, a, verdict in self.witnesses
            ],
        }


def orbit_check(
    T: Triangulation, N: int = DEFAULT_DEGREE, max_size: int = 100, witnesses: bool = True
) -> OrbitReport:
    """Sweep the flip orbit: every profile against the first, every flip edge's witness"""
    orbit: FlipOrbit = flip_orbit(T, max_size)
    systems: Dict[Triangulation, Tuple[IceQP, RewriteSystem]] = {}

    def system(t: Triangulation) -> Tuple[IceQP, RewriteSystem]:
        if t not in systems:
            qp: IceQP = build_ice_qp(t, ALL_EXTERNAL)
            systems[t] = qp, jacobian_system(qp, N)
        return systems[t]

    report: OrbitReport = OrbitReport(len(orbit), orbit.overflow, N)
    base_qp, base_rs = system(orbit.triangulations[0])
    base: BoundaryProfile = boundary_profile(base_qp, N, system=base_rs)
    for t in orbit.triangulations[1:]:
        qp, rs = system(t)
        report.profiles.append(compare_profiles(base, boundary_profile(qp, N, system=rs)))
    if witnesses:
        for index, arc, _ in orbit.flip_edges():
            source: Triangulation = orbit.triangulations[index]
            src, dst, witness, target = flip_pair(source, arc)
            verdict: Verdict = verify_witness(
                witness, src, dst, N, src_system=system(source)[1], dst_system=system(target)[1]
            )
            report.witnesses.append((index, arc, verdict))
    logger.info(f"Orbit check: {report.summary()}")
    return report


@dataclass
class VariantReport:
    primary: Verdict
    mixed: Verdict

    def to_json(self) -> Dict[str, Any]:
        return {"primary": self.primary.to_json(), "mixed": self.mixed.to_json()}


def variant_agreement(T: Triangulation, N: int = DEFAULT_DEGREE) -> VariantReport:
    """
    Incident-only external arrows with the not-both-frozen ideal against all
    external arrows with every non-external arrow differentiated. The mixed
    pairing (all external, not-both-frozen) is reported for information.
    """
    incident: IceQP = build_ice_qp(T, INCIDENT_ONLY)
    full: IceQP = build_ice_qp(T, ALL_EXTERNAL)
    a: BoundaryProfile = boundary_profile(incident, N, NOT_BOTH_FROZEN)
    b: BoundaryProfile = boundary_profile(full, N, EXCLUDE_Y_ONLY)
    c: BoundaryProfile = boundary_profile(full, N, NOT_BOTH_FROZEN)
    identity: Dict[str, str] = {v: v for v in a.frozen_vertices}
    return VariantReport(compare_profiles(a, b, identity), compare_profiles(c, b, identity))


@dataclass(frozen=True)
class PresentationRelation:
    name: str
    lhs: Tuple[str, ...]
    rhs: Tuple[str, ...]


@dataclass(frozen=True)
class Presentation:
    """Named generators (arrow words) and relations between generator words"""

    name: str
    generators: Mapping[str, Word]
    relations: Tuple[PresentationRelation, ...]
    source: Mapping[str, Any]
    base_dir: str = "."

    def qp(self) -> IceQP:
        if "qp" in self.source:
            return load_qp(os.path.join(self.base_dir, self.source["qp"]))
        if "construction" in self.source:
            from .construct import standard_triangulation  # pylint: disable=import-outside-toplevel

            params: Dict[str, Any] = dict(self.source["construction"])
            kind: str = params.pop("kind")
            return build_ice_qp(standard_triangulation(kind, **params), ALL_EXTERNAL)
        raise BoundaryError(f"Presentation {self.name} names no QP or construction")


def _split_word(text: str) -> Tuple[str, ...]:
    text = text.strip()
    return () if text in ("", "0") else tuple(s.strip() for s in text.split("."))


def load_presentation(path: str) -> Presentation:
    data: Mapping[str, Any] = load_json(path)
    try:
        return Presentation(
            name=str(data.get("name", os.path.basename(path))),
            generators={k: tuple(v) for k, v in data["generators"].items()},
            relations=tuple(
                PresentationRelation(
                    str(r.get("name", f"r{index}")), _split_word(r["lhs"]), _split_word(r["rhs"])
                )
                for index, r in enumerate(data["relations"])
            ),
            source=dict(data.get("source", {})),
            base_dir=os.path.dirname(os.path.abspath(path)),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise BoundaryError(f"Malformed presentation file {path}: {exc}") from exc


@dataclass
class PresentationCheck:
    name: str
    passed: bool
    residue: str
    checked: bool = True

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "residue": self.residue,
        }


def _generator_product(pres: Presentation, qp: IceQP, names: Sequence[str]) -> AlgebraElement:
    if not names:
        return AlgebraElement.zero(qp.quiver)
    word: Word = ()
    for name in names:
        if name not in pres.generators:
            raise BoundaryError(f"Unknown generator {name!r} in presentation {pres.name}")
        word += tuple(pres.generators[name])
    return _path_element(qp, word)


def check_presentation(
    pres: Presentation,
    qp: Optional[IceQP] = None,
    N: int = DEFAULT_DEGREE,
    variant: Optional[str] = None,
) -> List[PresentationCheck]:
    """Every listed relation ``lhs = rhs`` must hold in the computed algebra"""
    qp = qp or pres.qp()
    rs: RewriteSystem = jacobian_system(qp, N, variant)
    checks: List[PresentationCheck] = []
    for relation in pres.relations:
        element: AlgebraElement = _generator_product(pres, qp, relation.lhs) - _generator_product(
            pres, qp, relation.rhs
        )
        if not _within(element, rs):
            logger.warning(f"Relation {relation.name} of {pres.name} is beyond degree {N}")
            checks.append(PresentationCheck(relation.name, False, "", checked=False))
            continue
        residue: AlgebraElement = normal_form(element, rs)
        checks.append(PresentationCheck(relation.name, residue.is_zero, str(residue)))
        if not residue.is_zero:
            logger.warning(f"Relation {relation.name} of {pres.name} leaves {residue}")
    return checks
