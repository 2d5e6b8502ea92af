from typing import Any

from ..construct import Construction, UnsupportedKind, files
from ..surface import Triangulation, load_triangulation


@files.register(10)
class TriangulationFile(Construction):
    def matches(self, **params: Any) -> bool:
        return "path" in params

    def build(self, **params: Any) -> Triangulation:
        try:
            return load_triangulation(str(params["path"]))
        except OSError as exc:
            raise UnsupportedKind(f"Cannot read triangulation file: {exc}") from exc
