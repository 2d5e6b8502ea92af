import logging
from abc import ABC, abstractmethod
from typing import (
    Union,
    MutableMapping,
    TypeVar,
    Type,
    Callable,
    List,
    ClassVar,
    Generic,
    Any,
    Tuple,
)

from .surface import Triangulation, SurfaceError, Edge, Triangle, BOUNDARY


__all__ = [
    "ConstructionClass",
    "ChainedConstruction",
    "Construction",
    "UnsupportedKind",
    "get_construction",
    "standard_triangulation",
    "known_kinds",
    "boundary_id",
    "arc_id",
    "boundary_segments",
    "triangle_on",
]


logger: logging.Logger = logging.getLogger(__name__)


class UnsupportedKind(SurfaceError):
    ...


class Construction(ABC):
    """One way of building a standard triangulation from parameters"""

    @abstractmethod
    def matches(self, **params: Any) -> bool:
        ...

    @abstractmethod
    def build(self, **params: Any) -> Triangulation:
        ...


_CT = TypeVar("_CT", bound=Construction)
ConstructionClass = Type[_CT]


class ChainedConstruction(Generic[_CT]):
    """
    A named kind of triangulation. Constructions registered on it are tried
    from the highest priority down; the first one matching the parameters
    builds the triangulation.
    """

    _instances: ClassVar[MutableMapping[str, "ChainedConstruction"]] = {}

    @classmethod
    def get_construction(cls, name: str) -> "ChainedConstruction":
        if name not in cls._instances:
            raise UnsupportedKind(
                f'No construction found for kind "{name}" '
                f"(known: {', '.join(sorted(cls._instances))})"
            )
        return cls._instances[name]

    @classmethod
    def kinds(cls) -> List[str]:
        return sorted(cls._instances)

    def __init__(self, name: str):
        self.name: str = name
        self.constructions: MutableMapping[Union[int, float], ConstructionClass] = {}
        if name in self._instances:
            raise NameError(f"Conflicting name for {repr(self)}")
        self._instances[name] = self

    def register(
        self, priority: Union[int, float]
    ) -> Callable[[ConstructionClass], ConstructionClass]:
        def decorator(construction_class: ConstructionClass) -> ConstructionClass:
            nonlocal priority
            if priority in self.constructions:
                priority -= 0.00001 * len(self.constructions)
                logger.warning(
                    f"Duplicate priority in {repr(self)}. "
                    f"{construction_class.__name__} will be added with priority {priority}"
                )
            self.constructions[priority] = construction_class
            return construction_class

        if not isinstance(priority, (int, float)):
            raise AttributeError(
                '"priority" must be a number (did you forget to call the decorator?)'
            )
        return decorator

    def _build_constructions(self) -> List[_CT]:
        return [
            construction_cls()
            for _, construction_cls in sorted(
                self.constructions.items(), key=lambda c: c[0], reverse=True
            )
        ]

    def build(self, **params: Any) -> Triangulation:
        for construction in self._build_constructions():
            if construction.matches(**params):
                logger.debug(
                    f"Building {self.name} with {construction.__class__.__name__}: {params}"
                )
                return construction.build(**params)
        raise UnsupportedKind(f"No construction in {repr(self)} accepts {params}")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({repr(self.name)})"


get_construction = ChainedConstruction.get_construction
known_kinds = ChainedConstruction.kinds


def standard_triangulation(kind: str, **params: Any) -> Triangulation:
    return get_construction(kind).build(**params)


# Naming helpers shared by the bundled constructions and user plugins


def boundary_id(i: int) -> str:
    return f"b{i}"


def arc_id(x: str, y: str) -> str:
    return f"d{x}_{y}"


def boundary_segments(points: List[str]) -> List[Edge]:
    """Segment ``b_i`` runs from the previous point to the ``i``-th one"""
    return [
        Edge(boundary_id(i + 1), (points[i - 1], points[i]), BOUNDARY)
        for i in range(len(points))
    ]


def triangle_on(
    sides_by_ends: MutableMapping[Tuple[str, str], str], a: str, b: str, c: str
) -> Triangle:
    """
    Triangle with marked points ``a``, ``b``, ``c`` in anticlockwise order;
    ``sides_by_ends`` looks up the edge joining two points (either order).
    """

    def side(x: str, y: str) -> str:
        if (x, y) in sides_by_ends:
            return sides_by_ends[(x, y)]
        return sides_by_ends[(y, x)]

    return Triangle((side(a, b), side(c, a), side(b, c)), (a, c, b))


fans: ChainedConstruction = ChainedConstruction("fan")
stars: ChainedConstruction = ChainedConstruction("star")
polygons: ChainedConstruction = ChainedConstruction("polygon")
annuli: ChainedConstruction = ChainedConstruction("annulus_11")
files: ChainedConstruction = ChainedConstruction("custom-file")
