import os

import pytest

from boundary_qp import constructions
from boundary_qp.algebra import IceQP, load_qp
from boundary_qp.quiver import Quiver


TESTS_DIR: str = os.path.dirname(os.path.abspath(__file__))
FIXTURES_DIR: str = os.path.join(TESTS_DIR, "fixtures")
PLUGINS_DIR: str = os.path.join(os.path.dirname(TESTS_DIR), "constructions")


@pytest.fixture(scope="session", autouse=True)
def loaded_constructions() -> None:
    if PLUGINS_DIR not in constructions.__path__:
        constructions.__path__.append(PLUGINS_DIR)
    constructions.import_constructions()


@pytest.fixture
def fixture_path():
    def _path(name: str) -> str:
        return os.path.join(FIXTURES_DIR, name)

    return _path


@pytest.fixture
def square_qp(fixture_path) -> IceQP:
    return load_qp(fixture_path("square_qp.json"))


@pytest.fixture
def square_qp_unfrozen(square_qp) -> IceQP:
    quiver: Quiver = Quiver(square_qp.quiver.vertices, square_qp.quiver.arrows, frozenset())
    return IceQP(quiver, square_qp.potential.rebased(quiver))


@pytest.fixture
def torus(fixture_path) -> IceQP:
    return load_qp(fixture_path("torus.json"))
