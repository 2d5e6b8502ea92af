"""
Bundled triangulation constructions. User plugin directories are appended to
``__path__`` before :func:`import_constructions` runs.
"""
import inspect
import logging
import os
import pkgutil
from types import ModuleType
from typing import List, Tuple, Any

from ..construct import Construction, known_kinds
from ..utils import import_submodules


logger: logging.Logger = logging.getLogger(__name__)

__path__: List[str]
__path__ = [os.path.abspath(path) for path in pkgutil.extend_path(__path__, __name__)]

__all__: List[str] = []


def _publish_constructions(module: ModuleType) -> List[Tuple[str, Any]]:
    found: List[Tuple[str, Any]] = [
        (name, obj)
        for name, obj in inspect.getmembers(module, inspect.isclass)
        if issubclass(obj, Construction)
        and obj is not Construction
        and obj.__module__ == module.__name__
    ]
    logger.debug(f"{module.__name__} provides {[name for name, _ in found]}")
    return found


def import_constructions() -> List[str]:
    """Import every construction module on ``__path__``, returning the known kinds"""
    global __all__
    __all__ = import_submodules(
        __path__, globals(), package=__name__, on_import=_publish_constructions
    )
    kinds: List[str] = known_kinds()
    logger.debug(f"Known triangulation kinds: {', '.join(kinds)}")
    return kinds
