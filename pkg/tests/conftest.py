# tests/conftest.py
import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from core.graph_families import complete_bipartite  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def k22():
    return complete_bipartite(2)


@pytest.fixture
def k33():
    return complete_bipartite(3)
