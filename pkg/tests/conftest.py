"""Shared fixtures and tolerances.

Statistical tests use fixed seeds throughout; tolerances are set from the
analytic standard error of the quantity under test (usually at four to
five sigma) so failures mean defects, not noise. Set POLSQUEEZE_FULL=1
to enable the full-scale ensembles, which take tens of minutes.
"""

import os

import numpy as np
import pytest

from polsqueeze import TimeGrid, preset_config


def full_scale_enabled() -> bool:
    return os.environ.get("POLSQUEEZE_FULL", "") == "1"


requires_full_scale = pytest.mark.skipif(
    not full_scale_enabled(),
    reason="full-scale ensemble; set POLSQUEEZE_FULL=1 to run",
)


@pytest.fixture(scope="session")
def paper_config():
    return preset_config("paper")


@pytest.fixture
def small_grid():
    return TimeGrid(256, 8e-12)


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
