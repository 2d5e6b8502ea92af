import json
import logging
import pkgutil
from fractions import Fraction
from importlib import import_module
from types import ModuleType
from typing import (
    Union,
    Optional,
    List,
    Protocol,
    Iterable,
    Tuple,
    Any,
    MutableMapping,
    Dict,
)


logger: logging.Logger = logging.getLogger(__name__)


Word = Tuple[str, ...]
Rational = Union[Fraction, int, str]


DEFAULT_DEGREE: int = 16


# pylint: disable=invalid-name
def fmt_elapsed(seconds: float, precision: int = 2) -> str:
    """
    Format an elapsed run time for log messages
    :param seconds: The number of seconds
    :param precision: The amount of digits for the decimal part of the seconds
    :return: The formatted string, like "1m 02.50s" or "0.13s"
    """
    m: int = int(seconds) // 60
    s: float = seconds % 60
    if not m:
        return f"{s:.{precision}f}s"
    s_width: int = precision + 3 if precision else 2
    return f"{m:d}m {s:0{s_width}.{precision}f}s"


def parse_rational(value: Rational) -> Fraction:
    """Parse a coefficient written as an int, a Fraction or a "p/q" string"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"Not a rational coefficient: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"Not a rational coefficient: {value!r}") from exc
    raise ValueError(f"Not a rational coefficient: {value!r}")


def fmt_rational(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else str(value)


def load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fp:
        return json.load(fp)


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(text)


class ImportHook(Protocol):
    """Typing protocol for import hook callables"""

    def __call__(self, module: ModuleType) -> Optional[Iterable[Tuple[str, Any]]]:
        ...


def import_submodules(
    base_path: List[str],
    globals_: MutableMapping[str, Any],
    package: Optional[str] = None,
    on_import: Optional[ImportHook] = None,
) -> List[str]:
    """
    Import every non-private submodule found on ``base_path`` into ``globals_``.

    Modules are imported in name order so that registration side effects
    (priorities in construction chains) do not depend on filesystem order.

    :param base_path: the paths where to look for submodules.
    :param globals_: the namespace receiving the imported modules.
    :param package: package name, required for the relative imports.
    :param on_import: optional hook called with each imported module, returning
        extra ``(name, value)`` pairs to publish in the namespace.
    :return: the list of published names.
    """
    published: List[str] = []
    found: Dict[str, None] = {}
    for _, module_name, _ in pkgutil.iter_modules(base_path):  # type: ignore
        if not module_name.startswith("_"):
            found.setdefault(module_name)
    for module_name in sorted(found):
        logger.debug(f"Importing plugin module {module_name!r}")
        module: ModuleType = import_module("." + module_name, package=package)
        additions: Dict[str, Any] = {module_name: module}
        if on_import is not None:
            extra: Optional[Iterable[Tuple[str, Any]]] = on_import(module)
            if extra is not None:
                additions.update(extra)
        for name, value in additions.items():
            globals_[name] = value
            published.append(name)
    return published
