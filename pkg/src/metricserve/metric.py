"""Finite metric spaces from weighted graphs.

The metric is the all-pairs shortest-path distance of a connected,
positively weighted simple graph.  On top of it this module provides the
two shapes used by the charging analysis (balls and perforated balls)
together with the edge-part measure: a shape claims, on every graph
edge, a set of 1-D position intervals, and the measure of a subgraph
inside the shape is the total claimed length over the subgraph's edges.

Edge-part semantics
-------------------
A position t in [0, w] on edge (u, x) has distance to a node z of
``min(dist(z,u) + t, dist(z,x) + w - t)``.  A plain ball claims edge
parts by the endpoint rule: the whole edge when both endpoints lie in
the ball, the segment of length ``r - dist(center, u)`` nearest the
inside endpoint when only u lies in it, nothing otherwise.  A
perforated ball claims what the plain ball claims minus, for every node
v', the positions within distance r/rho of v'.  Starting the perforated
case from the endpoint rule (instead of re-deriving inside-ball
positions from the 1-D distance) keeps the perforation-difference bound
``measure(ball) - measure(perforated) <= 2 r n^2 / rho`` an identity of
the construction: each edge loses at most ``2 r / rho`` to holes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config

__all__ = [
    "WeightedGraph",
    "MetricSpace",
    "Ball",
    "PerforatedBall",
    "Shape",
    "DisconnectedGraphError",
    "build_metric",
    "ball_points",
    "shape_edge_measure",
    "perforation_gap_bound_check",
    "edge_intervals_in_shape",
    "shapes_edge_disjoint",
    "complete_graph_on",
]


class DisconnectedGraphError(ValueError):
    """The input graph does not connect all of its nodes."""


EdgeSet = frozenset[tuple[int, int]]


@dataclass(frozen=True)
class WeightedGraph:
    """Simple undirected graph with strictly positive edge weights."""

    node_count: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.node_count <= 0:
            raise ValueError("node_count must be positive")
        object.__setattr__(
            self, "edges", tuple((int(u), int(v), float(w)) for u, v, w in self.edges)
        )
        seen = set()
        for u, v, w in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValueError(f"edge ({u},{v}) out of node range")
            if w <= 0:
                raise ValueError(f"edge ({u},{v}) has non-positive weight {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge between {u} and {v}")
            seen.add(key)


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")


@dataclass(frozen=True)
class PerforatedBall:
    """Ball minus a ball of radius ``radius / rho`` around every node."""

    center: int
    radius: float
    rho: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")
        if self.rho <= 1:
            raise ValueError("rho must exceed 1")


Shape = Ball | PerforatedBall


@dataclass(frozen=True)
class MetricSpace:
    """Immutable all-pairs shortest-path metric over a weighted graph."""

    n: int
    dist: np.ndarray
    d_min: float
    source_graph: WeightedGraph
    _adj: dict[int, list[tuple[int, float]]] = field(repr=False, default_factory=dict)
    _edge_weight: dict[tuple[int, int], float] = field(repr=False, default_factory=dict)

    def distance(self, u: int, v: int) -> float:
        return float(self.dist[u, v])

    def edge_weight(self, u: int, v: int) -> float:
        return self._edge_weight[(min(u, v), max(u, v))]

    def neighbors(self, u: int) -> list[tuple[int, float]]:
        return self._adj.get(u, [])

    @property
    def edges(self) -> EdgeSet:
        return frozenset(self._edge_weight)

    def total_weight(self) -> float:
        return float(sum(self._edge_weight.values()))

    def aspect_ratio(self) -> float:
        return float(self.dist.max()) / self.d_min if self.n > 1 else 1.0

    def shortest_path_nodes(self, u: int, v: int) -> list[int]:
        """Lexicographically smallest shortest path from u to v, as nodes.

        Greedy: at each node pick the smallest-id neighbor that keeps the
        remaining distance exact.  Deterministic, so traced walks and
        tree expansions are reproducible.
        """
        eps = config.EPS_GEO
        path = [u]
        cur = u
        target = self.distance(u, v)
        remaining = target
        while cur != v:
            for z, w in self._adj[cur]:
                if abs(w + self.distance(z, v) - remaining) <= eps:
                    path.append(z)
                    remaining -= w
                    cur = z
                    break
            else:
                raise RuntimeError(f"no shortest-path step from {cur} toward {v}")
        return path


def build_metric(g: WeightedGraph) -> MetricSpace:
    """All-pairs shortest paths via Floyd-Warshall relaxation.

    Raises DisconnectedGraphError when some pair is unreachable.
    """
    n = g.node_count
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    adj: dict[int, list[tuple[int, float]]] = {u: [] for u in range(n)}
    edge_weight: dict[tuple[int, int], float] = {}
    for u, v, w in g.edges:
        dist[u, v] = min(dist[u, v], w)
        dist[v, u] = min(dist[v, u], w)
        adj[u].append((v, w))
        adj[v].append((u, w))
        edge_weight[(min(u, v), max(u, v))] = w
    for u in adj:
        adj[u].sort()
    for k in range(n):
        dist = np.minimum(dist, dist[:, k, None] + dist[None, k, :])
    if np.isinf(dist).any():
        bad = int(np.argwhere(np.isinf(dist))[0][1])
        raise DisconnectedGraphError(f"graph is disconnected: node {bad} unreachable")
    positive = dist[dist > 0]
    d_min = float(positive.min()) if positive.size else 1.0
    dist.setflags(write=False)
    return MetricSpace(
        n=n, dist=dist, d_min=d_min, source_graph=g, _adj=adj, _edge_weight=edge_weight
    )


def ball_points(m: MetricSpace, v: int, r: float) -> frozenset[int]:
    """Nodes within (closed) distance r of v."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    row = m.dist[v]
    return frozenset(int(u) for u in np.nonzero(row <= r + config.EPS_GEO)[0])


# ---------------------------------------------------------------------------
# interval arithmetic on a single edge, positions in [0, w]
# ---------------------------------------------------------------------------


def _merge(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    eps = config.EPS_GEO
    out: list[tuple[float, float]] = []
    for lo, hi in sorted(intervals):
        if hi - lo <= 0:
            continue
        if out and lo <= out[-1][1] + eps:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _subtract(
    base: list[tuple[float, float]], holes: list[tuple[float, float]]
) -> list[tuple[float, float]]:
    holes = _merge(holes)
    out: list[tuple[float, float]] = []
    for lo, hi in base:
        cur = lo
        for hlo, hhi in holes:
            if hhi <= cur or hlo >= hi:
                continue
            if hlo > cur:
                out.append((cur, hlo))
            cur = max(cur, hhi)
            if cur >= hi:
                break
        if cur < hi:
            out.append((cur, hi))
    return out


def _positions_within(
    m: MetricSpace, u: int, x: int, w: float, z: int, r: float
) -> list[tuple[float, float]]:
    """Positions t on edge (u, x) with min(d(z,u)+t, d(z,x)+w-t) <= r."""
    out = []
    left = r - m.distance(z, u)
    if left > 0:
        out.append((0.0, min(w, left)))
    right = r - m.distance(z, x)
    if right > 0:
        out.append((max(0.0, w - right), w))
    return _merge(out)


def _ball_claim(
    m: MetricSpace, u: int, x: int, w: float, v: int, r: float
) -> list[tuple[float, float]]:
    """Endpoint-rule claim of Ball(v, r) on edge (u, x)."""
    eps = config.EPS_GEO
    du, dx = m.distance(v, u), m.distance(v, x)
    u_in, x_in = du <= r + eps, dx <= r + eps
    if u_in and x_in:
        return [(0.0, w)]
    if u_in:
        part = min(w, max(0.0, r - du))
        return [(0.0, part)] if part > 0 else []
    if x_in:
        part = min(w, max(0.0, r - dx))
        return [(w - part, w)] if part > 0 else []
    return []


def edge_intervals_in_shape(
    m: MetricSpace, u: int, x: int, w: float, shape: Shape
) -> list[tuple[float, float]]:
    """Position intervals the shape claims on edge (u, x) of weight w."""
    if isinstance(shape, Ball):
        return _ball_claim(m, u, x, w, shape.center, shape.radius)
    base = _ball_claim(m, u, x, w, shape.center, shape.radius)
    if not base:
        return []
    hole_r = shape.radius / shape.rho
    holes: list[tuple[float, float]] = []
    for z in range(m.n):
        holes.extend(_positions_within(m, u, x, w, z, hole_r))
    return _subtract(base, holes)


def shape_edge_measure(m: MetricSpace, edges: EdgeSet, shape: Shape) -> float:
    """Total length the shape claims over the given source-graph edges."""
    total = 0.0
    for u, x in edges:
        w = m.edge_weight(u, x)
        total += sum(hi - lo for lo, hi in edge_intervals_in_shape(m, u, x, w, shape))
    return total


def perforation_gap_bound_check(
    m: MetricSpace, edges: EdgeSet, v: int, r: float, rho: float
) -> bool:
    """measure(ball) <= measure(perforated ball) + 2 r n^2 / rho."""
    ball = shape_edge_measure(m, edges, Ball(v, r))
    perf = shape_edge_measure(m, edges, PerforatedBall(v, r, rho))
    return ball <= perf + 2.0 * r * m.n**2 / rho + config.EPS_GEO


def shapes_edge_disjoint(m: MetricSpace, a: Shape, b: Shape) -> bool:
    """Whether the two shapes claim disjoint edge parts on every graph edge."""
    eps = config.EPS_GEO
    for u, x in m.edges:
        w = m.edge_weight(u, x)
        ia = edge_intervals_in_shape(m, u, x, w, a)
        if not ia:
            continue
        ib = edge_intervals_in_shape(m, u, x, w, b)
        for lo1, hi1 in ia:
            for lo2, hi2 in ib:
                if min(hi1, hi2) - max(lo1, lo2) > eps:
                    return False
    return True


def complete_graph_on(m: MetricSpace, points: list[int]) -> tuple[WeightedGraph, list[int]]:
    """Metric closure over a subset of points.

    Returns the complete graph whose node i stands for ``points[i]`` with
    weights taken from m, plus the (sorted) point list for index mapping.
    Used by the request-regime variants, which restrict tree computations
    to released points.
    """
    pts = sorted(set(points))
    edges = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            edges.append((i, j, m.distance(pts[i], pts[j])))
    return WeightedGraph(node_count=len(pts), edges=tuple(edges)), pts
