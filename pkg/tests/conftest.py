import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from metricserve.metric import MetricSpace, WeightedGraph, build_metric


@pytest.fixture
def path_graph() -> WeightedGraph:
    """0 --1-- 1 --2-- 2, the running hand example."""
    return WeightedGraph(node_count=3, edges=((0, 1, 1.0), (1, 2, 2.0)))


@pytest.fixture
def path_metric(path_graph) -> MetricSpace:
    return build_metric(path_graph)


@pytest.fixture
def star_metric() -> MetricSpace:
    """Center 0 with three unit leaves 1, 2, 3."""
    g = WeightedGraph(node_count=4, edges=((0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)))
    return build_metric(g)


def random_graph(rng: random.Random, n: int, extra_edges: int = 0,
                 weight_range=(1.0, 10.0), integer_weights=False) -> WeightedGraph:
    """Random connected graph: a random tree plus extra random edges."""
    edges = []
    used = set()
    for v in range(1, n):
        u = rng.randrange(v)
        lo, hi = weight_range
        w = rng.randint(int(lo), int(hi)) if integer_weights else rng.uniform(lo, hi)
        edges.append((u, v, float(w)))
        used.add((u, v))
    attempts = 0
    while extra_edges > 0 and attempts < 50 * extra_edges:
        attempts += 1
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in used:
            continue
        used.add(key)
        lo, hi = weight_range
        w = rng.randint(int(lo), int(hi)) if integer_weights else rng.uniform(lo, hi)
        edges.append((key[0], key[1], float(w)))
        extra_edges -= 1
    return WeightedGraph(node_count=n, edges=tuple(edges))
