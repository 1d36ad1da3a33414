import os
import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Keep test runs independent of a developer's .env
os.environ["FUNDSOL_LOG_LEVEL"] = "WARNING"

from fundsol.schemas.run import Budgets  # noqa: E402
from fundsol.services.symbol import HomogeneousSymbol  # noqa: E402
from fundsol.services.testfn import gaussian  # noqa: E402

CONFIG_DIR = project_root / "configs"
SYMBOL_DIR = CONFIG_DIR / "symbols"
GOLDEN_DIR = project_root / "tests" / "golden"


@pytest.fixture(scope="session")
def config_dir():
    return CONFIG_DIR


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def wave():
    return HomogeneousSymbol.load(SYMBOL_DIR / "wave.json")


@pytest.fixture(scope="session")
def hyperbolic2d():
    return HomogeneousSymbol.load(SYMBOL_DIR / "xi1xi2.json")


@pytest.fixture(scope="session")
def cubic3d():
    return HomogeneousSymbol.load(SYMBOL_DIR / "cubic.json")


@pytest.fixture(scope="session")
def laplace2d():
    return HomogeneousSymbol.load(SYMBOL_DIR / "laplace2d.json")


@pytest.fixture(scope="session")
def degenerate3d():
    return HomogeneousSymbol.load(SYMBOL_DIR / "xi1xi2xi3.json")


@pytest.fixture(scope="session")
def plane3d():
    """p = xi_3, with L(1) = 2 pi on (-1, 1)."""
    return HomogeneousSymbol.from_monomials([((0, 0, 1), 1.0)], 3, name="xi3")


@pytest.fixture
def centered3d():
    return gaussian((0.0, 0.0, 0.0), 1.0, label="g0")


@pytest.fixture
def centered2d():
    return gaussian((0.0, 0.0), 1.0, label="g0")


@pytest.fixture
def small_budgets():
    """Reduced node counts for the unit tests."""
    return Budgets(sample_budget=4000, quadrature_level=48)
