import numpy as np
import pytest

from backend.tools.metric_core import FiniteMetricSpace, WeightedGraph


def random_connected_graph(rng, n, extra=0.3, weights=(1,)):
    """Random spanning tree plus each remaining pair with probability ``extra``."""
    edges = {}
    for k in range(1, n):
        edges[(int(rng.integers(0, k)), k)] = float(rng.choice(weights))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra:
                edges[(u, v)] = float(rng.choice(weights))
    return WeightedGraph(n, [(u, v, w) for (u, v), w in edges.items()])


def random_tree(rng, n, weights=(1,)):
    return WeightedGraph(n, [(int(rng.integers(0, k)), k, float(rng.choice(weights))) for k in range(1, n)])


def cycle(n, weight=1.0):
    return WeightedGraph(n, [(i, (i + 1) % n, weight) for i in range(n)])


def path(n, weight=1.0):
    return WeightedGraph(n, [(i, i + 1, weight) for i in range(n - 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def path4():
    return path(4)


@pytest.fixture
def square():
    return cycle(4)


@pytest.fixture
def hexagon():
    return cycle(6).metric


@pytest.fixture
def triangle():
    return FiniteMetricSpace(np.ones((3, 3)) - np.eye(3))


@pytest.fixture
def write_doc(tmp_path):
    def write(text, name="workspace.txt"):
        target = tmp_path / name
        target.write_text(text)
        return str(target)

    return write
