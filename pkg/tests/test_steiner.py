"""Steiner / PCST solvers against enumeration oracles and ratio bounds."""

import random

import pytest

from metricserve.metric import build_metric
from metricserve.steiner import (
    TerminalCapError,
    infinite_penalty,
    pcst_approx,
    pcst_exact,
    steiner_approx,
    steiner_exact,
)
from metricserve.walks import tree_adjacency

from conftest import random_graph
from oracles import pcst_enumeration, steiner_enumeration


def _connects(edges, required):
    """The edge set links every required node into one component."""
    required = set(required)
    if len(required) <= 1:
        return True
    adj = tree_adjacency(edges)
    if not required <= set(adj):
        return False
    start = next(iter(required))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj.get(u, []):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return required <= seen


def _acyclic(edges):
    return len(edges) == 0 or len({u for e in edges for u in e}) == len(edges) + 1


def test_steiner_single_terminal(path_metric):
    sol = steiner_approx(path_metric, {1})
    assert sol.cost == 0.0 and not sol.tree_edges


def test_steiner_two_terminals(path_metric):
    sol = steiner_approx(path_metric, {0, 2})
    assert sol.cost == pytest.approx(3.0)
    assert _connects(sol.tree_edges, {0, 2})


def test_steiner_star_leaves(star_metric):
    exact = steiner_exact(star_metric, {1, 2, 3})
    approx = steiner_approx(star_metric, {1, 2, 3})
    assert exact.cost == pytest.approx(3.0)
    assert approx.cost == pytest.approx(3.0)


def test_steiner_exact_two_terminals(path_metric):
    assert steiner_exact(path_metric, {0, 2}).cost == pytest.approx(3.0)


def test_steiner_exact_whole_tree():
    rng = random.Random(3)
    g = random_graph(rng, 7, extra_edges=0)
    m = build_metric(g)
    sol = steiner_exact(m, set(range(7)))
    assert sol.cost == pytest.approx(sum(w for _, _, w in g.edges))


def test_steiner_exact_cap_enforced():
    rng = random.Random(5)
    g = random_graph(rng, 12, extra_edges=6)
    m = build_metric(g)
    with pytest.raises(TerminalCapError):
        steiner_exact(m, set(range(11)))


def test_steiner_exact_matches_enumeration():
    """200 random instances, |T| <= 6, against subset enumeration + MST."""
    rng = random.Random(17)
    for _ in range(200):
        n = rng.randint(3, 9)
        g = random_graph(rng, n, extra_edges=rng.randrange(6))
        m = build_metric(g)
        k = rng.randint(2, min(6, n))
        terminals = set(rng.sample(range(n), k))
        sol = steiner_exact(m, terminals)
        want = steiner_enumeration(m, terminals)
        assert sol.cost == pytest.approx(want, abs=1e-9)
        assert _connects(sol.tree_edges, terminals)
        assert _acyclic(sol.tree_edges)


def test_steiner_ratio_bound():
    rng = random.Random(19)
    for _ in range(100):
        n = rng.randint(3, 10)
        g = random_graph(rng, n, extra_edges=rng.randrange(8))
        m = build_metric(g)
        k = rng.randint(1, min(8, n))
        terminals = set(rng.sample(range(n), k))
        exact = steiner_exact(m, terminals)
        approx = steiner_approx(m, terminals)
        assert exact.cost - 1e-9 <= approx.cost <= 2 * exact.cost + 1e-9
        assert _connects(approx.tree_edges, terminals)
        assert _acyclic(approx.tree_edges)


def test_pcst_all_zero_penalties(path_metric):
    sol = pcst_approx(path_metric, {0, 2}, {0: 0.0, 2: 0.0}, root=1)
    assert sol.total_cost == pytest.approx(0.0)
    exact = pcst_exact(path_metric, {0, 2}, {0: 0.0, 2: 0.0}, root=1)
    assert exact.total_cost == pytest.approx(0.0)


def test_pcst_single_terminal_tradeoff(path_metric):
    # terminal at node 2, root 0, distance 3
    for p in (0.5, 3.0, 10.0):
        sol = pcst_approx(path_metric, {2}, {2: p}, root=0)
        best = min(3.0, p)
        assert best - 1e-9 <= sol.total_cost <= 3 * best + 1e-9
        exact = pcst_exact(path_metric, {2}, {2: p}, root=0)
        assert exact.total_cost == pytest.approx(best)


def test_pcst_infinite_penalty_forces_service():
    rng = random.Random(29)
    for _ in range(30):
        n = rng.randint(3, 8)
        g = random_graph(rng, n, extra_edges=rng.randrange(5))
        m = build_metric(g)
        k = rng.randint(1, min(5, n))
        terminals = set(rng.sample(range(n), k))
        root = rng.randrange(n)
        pen = {t: infinite_penalty(m) for t in terminals}
        exact = pcst_exact(m, terminals, pen, root)
        st = steiner_exact(m, terminals | {root})
        assert exact.total_cost == pytest.approx(st.cost, abs=1e-9)
        approx = pcst_approx(m, terminals, pen, root)
        assert approx.served == frozenset(terminals)


def test_pcst_exact_matches_enumeration():
    rng = random.Random(37)
    for _ in range(60):
        n = rng.randint(3, 8)
        g = random_graph(rng, n, extra_edges=rng.randrange(5))
        m = build_metric(g)
        k = rng.randint(1, min(5, n))
        terminals = set(rng.sample(range(n), k))
        root = rng.randrange(n)
        pen = {t: rng.uniform(0.0, 15.0) for t in terminals}
        sol = pcst_exact(m, terminals, pen, root)
        want = pcst_enumeration(m, terminals, pen, root)
        assert sol.total_cost == pytest.approx(want, abs=1e-9)
        assert sol.total_cost == pytest.approx(sol.tree_cost + sol.penalty_cost)
        assert _connects(sol.tree_edges, sol.served - {root} | {root} if sol.served else set())


def test_pcst_ratio_bound():
    """exact <= approx <= 3 * exact on random instances."""
    rng = random.Random(41)
    for _ in range(200):
        n = rng.randint(3, 10)
        g = random_graph(rng, n, extra_edges=rng.randrange(6))
        m = build_metric(g)
        k = rng.randint(1, min(6, n))
        terminals = set(rng.sample(range(n), k))
        root = rng.randrange(n)
        pen = {t: rng.uniform(0.0, 20.0) for t in terminals}
        exact = pcst_exact(m, terminals, pen, root)
        approx = pcst_approx(m, terminals, pen, root)
        assert exact.total_cost - 1e-9 <= approx.total_cost
        assert approx.total_cost <= 3 * exact.total_cost + 1e-9
        assert _acyclic(approx.tree_edges)
        assert _connects(approx.tree_edges, approx.served | {root})


def test_pcst_exact_monotone_in_penalties():
    """Pointwise-larger penalties never decrease the exact total."""
    rng = random.Random(43)
    for _ in range(40):
        n = rng.randint(3, 8)
        g = random_graph(rng, n, extra_edges=rng.randrange(4))
        m = build_metric(g)
        k = rng.randint(1, min(5, n))
        terminals = set(rng.sample(range(n), k))
        root = rng.randrange(n)
        pen_lo = {t: rng.uniform(0.0, 10.0) for t in terminals}
        pen_hi = {t: p + rng.uniform(0.0, 5.0) for t, p in pen_lo.items()}
        lo = pcst_exact(m, terminals, pen_lo, root)
        hi = pcst_exact(m, terminals, pen_hi, root)
        assert lo.total_cost <= hi.total_cost + 1e-9


def test_pcst_terminal_at_root(path_metric):
    sol = pcst_approx(path_metric, {0, 2}, {0: 5.0, 2: 0.0}, root=0)
    assert 0 in sol.served
    assert sol.penalty_cost == pytest.approx(0.0)
