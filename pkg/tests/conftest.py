"""Shared fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest

# 确保项目根目录在 Python 路径中
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from egolsm.constants import KARATE_EDGE_LIST, KARATE_LABELS  # noqa: E402
from egolsm.core.model import AdjacencyMatrix  # noqa: E402
from egolsm.utils.io import load_network, read_labels  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def karate():
    """(AdjacencyMatrix, base) of the bundled karate club."""
    return load_network(KARATE_EDGE_LIST)


@pytest.fixture(scope="session")
def karate_labels(karate):
    A, base = karate
    return read_labels(KARATE_LABELS, A.n, base)


@pytest.fixture
def path_graph():
    """1-2-3-4 path, 0-based."""
    return AdjacencyMatrix.from_edges([(0, 1), (1, 2), (2, 3)], 4)
