"""Walk construction shared by the engines and the offline oracle.

Walks are node sequences; every hop between consecutive recorded nodes is
expanded through the deterministic (lexicographically smallest) shortest
path, and walk cost is the sum of consecutive distances.
"""

from __future__ import annotations

from .metric import MetricSpace

__all__ = ["expand_hops", "walk_cost", "tree_dfs_nodes", "tree_adjacency"]


def tree_adjacency(edges) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for u in adj:
        adj[u].sort()
    return adj


def tree_dfs_nodes(edges, start: int) -> list[int]:
    """Depth-first tour of a tree from start, children by ascending id.

    Returns the closed node tour [start, ..., start]; every tree edge is
    traversed exactly twice.
    """
    adj = tree_adjacency(edges)
    if start not in adj:
        return [start]
    tour = [start]

    def visit(u: int, parent: int) -> None:
        for v in adj[u]:
            if v == parent:
                continue
            tour.append(v)
            visit(v, u)
            tour.append(u)

    visit(start, -1)
    return tour


def expand_hops(m: MetricSpace, hops: list[int]) -> list[int]:
    """Expand a hop sequence into a full node walk along shortest paths."""
    if not hops:
        return []
    walk = [hops[0]]
    for target in hops[1:]:
        if target == walk[-1]:
            continue
        walk.extend(m.shortest_path_nodes(walk[-1], target)[1:])
    return walk


def walk_cost(m: MetricSpace, walk: list[int]) -> float:
    return sum(m.distance(u, v) for u, v in zip(walk, walk[1:]))
