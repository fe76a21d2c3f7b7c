from __future__ import annotations

import numpy as np
import pytest

from anchorsg import warehouse

import helpers


@pytest.fixture(scope="session")
def smallest():
    return helpers.smallest_game()


@pytest.fixture(scope="session")
def two_stage():
    return helpers.two_stage_game()


@pytest.fixture(scope="session")
def small_warehouse():
    """T=2 warehouse game, comfortably inside every brute-force oracle."""
    return warehouse.compile_game(warehouse.generate(1), rounds=2)


@pytest.fixture(scope="session")
def medium_warehouse():
    """T=3 warehouse game with a genuinely mixed optimum."""
    return warehouse.compile_game(warehouse.generate(4), rounds=3)


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)
