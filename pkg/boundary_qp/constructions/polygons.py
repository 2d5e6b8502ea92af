"""Fan and star triangulations of (once punctured) polygons"""
from typing import Any, Dict, List, Tuple

from ..construct import (
    Construction,
    UnsupportedKind,
    fans,
    stars,
    polygons,
    arc_id,
    boundary_segments,
    triangle_on,
)
from ..surface import Triangulation, SurfaceSignature, Edge, Triangle, ARC


def polygon_points(m: int) -> List[str]:
    return [str(i) for i in range(1, m + 1)]


def _require_int(params: Dict[str, Any], name: str, minimum: int) -> int:
    try:
        value: int = int(params[name])
    except KeyError as exc:
        raise UnsupportedKind(f'Missing parameter "{name}"') from exc
    except (TypeError, ValueError) as exc:
        raise UnsupportedKind(f'Parameter "{name}" must be an integer') from exc
    if value < minimum:
        raise UnsupportedKind(f'Parameter "{name}" must be at least {minimum}, got {value}')
    return value


def fan(m: int) -> Triangulation:
    """All arcs start at the first point: d1_3 .. d1_{m-1}"""
    points: List[str] = polygon_points(m)
    edges: List[Edge] = boundary_segments(points)
    edges += [Edge(arc_id("1", str(i)), ("1", str(i)), ARC) for i in range(3, m)]
    by_ends: Dict[Tuple[str, str], str] = {e.ends: e.id for e in edges}
    triangles: List[Triangle] = [
        triangle_on(by_ends, "1", str(i), str(i + 1)) for i in range(2, m)
    ]
    return Triangulation.build(SurfaceSignature(0, (m,), 0), [points], [], edges, triangles)


def star(m: int, puncture: str = "p1") -> Triangulation:
    """Every boundary point joined to the puncture"""
    points: List[str] = polygon_points(m)
    edges: List[Edge] = boundary_segments(points)
    edges += [Edge(arc_id(p, puncture), (p, puncture), ARC) for p in points]
    by_ends: Dict[Tuple[str, str], str] = {e.ends: e.id for e in edges}
    triangles: List[Triangle] = [
        triangle_on(by_ends, points[i], points[(i + 1) % m], puncture) for i in range(m)
    ]
    return Triangulation.build(
        SurfaceSignature(0, (m,), 1), [points], [puncture], edges, triangles
    )


@fans.register(10)
class FanConstruction(Construction):
    def matches(self, **params: Any) -> bool:
        return "m" in params

    def build(self, **params: Any) -> Triangulation:
        return fan(_require_int(params, "m", 4))


@stars.register(10)
class StarConstruction(Construction):
    def matches(self, **params: Any) -> bool:
        return "m" in params

    def build(self, **params: Any) -> Triangulation:
        return star(_require_int(params, "m", 2))


# The polygon P(n, p) has n + 3 boundary points and p punctures


def _punctures(params: Dict[str, Any]) -> int:
    return int(params.get("p", 0))


@polygons.register(10)
class UnpuncturedPolygon(Construction):
    def matches(self, **params: Any) -> bool:
        return _punctures(params) == 0

    def build(self, **params: Any) -> Triangulation:
        return fan(_require_int(params, "n", 1) + 3)


@polygons.register(20)
class OncePuncturedPolygon(Construction):
    def matches(self, **params: Any) -> bool:
        return _punctures(params) == 1

    def build(self, **params: Any) -> Triangulation:
        return star(_require_int(params, "n", 1) + 3)
