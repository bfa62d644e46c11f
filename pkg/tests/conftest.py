"""
Shared fixtures: small grids, seeded generators, a throwaway artifact store.
"""

import numpy as np
import pytest

from forge.core.config import get_settings
from forge.core.flags import get_flags
from forge.core.storage import LocalStorage
from forge.harness.registry import init_commands
from forge.spectral.field import FourierField, Rank
from forge.spectral.grid import TorusGrid
from forge.spectral.operators import dealias, leray_project

# Register every command before test modules import individual command
# modules, matching the entry point's import order (main.py).
init_commands()


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings and flags are re-read per test so monkeypatched env vars apply."""
    get_settings.cache_clear()
    get_flags.cache_clear()
    yield
    get_settings.cache_clear()
    get_flags.cache_clear()


@pytest.fixture
def grid() -> TorusGrid:
    return TorusGrid(n=16)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def store(tmp_path) -> LocalStorage:
    return LocalStorage(tmp_path)


def random_field(grid: TorusGrid, seed: int, rank: Rank = Rank.VECTOR, solenoidal: bool = False) -> FourierField:
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(rank.component_shape + grid.shape)
    f = dealias(FourierField.from_physical(grid, values, rank))
    return leray_project(f) if solenoidal else f
