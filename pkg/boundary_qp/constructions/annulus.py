from typing import Any

from ..construct import Construction, annuli
from ..surface import Triangulation, SurfaceSignature, Edge, Triangle, ARC, BOUNDARY


def annulus_11() -> Triangulation:
    """
    Annulus with one marked point on each boundary component, cut by two
    arcs joining them. Corners are explicit since every side pair shares
    both endpoints.
    """
    edges = [
        Edge("b1", ("1", "1"), BOUNDARY),
        Edge("b2", ("2", "2"), BOUNDARY),
        Edge("d1_2a", ("1", "2"), ARC),
        Edge("d1_2b", ("1", "2"), ARC),
    ]
    triangles = [
        Triangle(("b1", "d1_2a", "d1_2b"), ("1", "2", "1")),
        Triangle(("b2", "d1_2a", "d1_2b"), ("2", "1", "2")),
    ]
    return Triangulation.build(
        SurfaceSignature(0, (1, 1), 0), [["1"], ["2"]], [], edges, triangles
    )


@annuli.register(10)
class MinimalAnnulus(Construction):
    def matches(self, **params: Any) -> bool:
        return not params

    def build(self, **params: Any) -> Triangulation:
        return annulus_11()
