"""
Triangulation of the twice punctured polygon P(n, 2), glued from a star of
the first n + 1 points around one puncture and a star of the square
P1, P(n+1), P(n+2), P(n+3) around the other.

Loaded from the working directory by ``--constructions-paths`` (default).
"""
from typing import Any, Dict, List, Tuple

from boundary_qp.construct import (
    Construction,
    UnsupportedKind,
    polygons,
    arc_id,
    boundary_segments,
    triangle_on,
)
from boundary_qp.surface import Triangulation, SurfaceSignature, Edge, Triangle, ARC


def twice_punctured(n: int) -> Triangulation:
    if n < 2:
        raise UnsupportedKind("The glued construction needs n >= 2")
    m: int = n + 3
    points: List[str] = [str(i) for i in range(1, m + 1)]
    first: List[str] = points[: n + 1]
    second: List[str] = ["1", str(n + 1), str(n + 2), str(n + 3)]
    edges: List[Edge] = boundary_segments(points)
    edges.append(Edge(arc_id("1", str(n + 1)), ("1", str(n + 1)), ARC))
    edges += [Edge(arc_id(p, "p1"), (p, "p1"), ARC) for p in first]
    edges += [Edge(arc_id(p, "p2"), (p, "p2"), ARC) for p in second]
    by_ends: Dict[Tuple[str, str], str] = {e.ends: e.id for e in edges}
    triangles: List[Triangle] = []
    for corner_points, puncture in ((first, "p1"), (second, "p2")):
        k: int = len(corner_points)
        triangles += [
            triangle_on(by_ends, corner_points[i], corner_points[(i + 1) % k], puncture)
            for i in range(k)
        ]
    return Triangulation.build(
        SurfaceSignature(0, (m,), 2), [points], ["p1", "p2"], edges, triangles
    )


@polygons.register(30)
class TwicePuncturedPolygon(Construction):
    def matches(self, **params: Any) -> bool:
        return int(params.get("p", 0)) == 2

    def build(self, **params: Any) -> Triangulation:
        return twice_punctured(int(params["n"]))
