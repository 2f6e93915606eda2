"""Exact offline optimum for desk-scale instances, with timed traces.

Deadline mode
-------------
Movement is instantaneous and time-independent, so an optimal solution
may be assumed lazy (it parks only on request points) and to serve each
next request as early as its window allows.  Under the greedy visit
times ``t_i = max(t_{i-1}, release_i)`` the completion time of a visited
set depends only on the set (it is the maximum release), so a bitmask DP
over (served set, last request) with min movement cost is exact; it is
cross-checked against permutation brute force in the tests.

Delay mode
----------
Batch-shift lemma: take any solution and any service batch, and move the
batch's service time earlier to the latest release among its members.
Movement cost is unchanged (movement is instantaneous and
time-independent) and each member's delay ``y_q`` is nondecreasing, so
the total cost does not increase.  Hence some optimal solution serves
only at release times, and a DP over (release event, server position,
served subset) with exact intra-batch walks is exact.  The tests
cross-check it against exhaustive enumeration of batch assignments and
visit orders.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from . import config
from .instance import Instance
from .metric import EdgeSet, MetricSpace, build_metric
from .walks import expand_hops, walk_cost

__all__ = ["OptEvent", "OptTrace", "OracleCapError", "opt_deadline", "opt_delay", "opt_edges_during"]

_DEADLINE_CAP = 12
_DELAY_CAP = 8


class OracleCapError(ValueError):
    """Instance exceeds the exact oracle's request cap."""


@dataclass(frozen=True)
class OptEvent:
    time: float
    walk: tuple[int, ...]
    served_ids: tuple[int, ...]


@dataclass(frozen=True)
class OptTrace:
    mode: str
    start: int
    events: tuple[OptEvent, ...]
    movement_cost: float
    delay_cost: float
    service_time: dict[int, float]

    def position_at(self, t: float) -> int:
        """Server position after all events with time <= t."""
        pos = self.start
        for ev in self.events:
            if ev.time <= t + config.EPS_TIME:
                pos = ev.walk[-1] if ev.walk else pos
            else:
                break
        return pos

    @property
    def total_cost(self) -> float:
        return self.movement_cost + self.delay_cost

    def to_json(self) -> str:
        doc = {
            "mode": self.mode,
            "start": self.start,
            "movement_cost": self.movement_cost,
            "delay_cost": self.delay_cost,
            "total_cost": self.total_cost,
            "events": [
                {"time": ev.time, "walk": list(ev.walk), "served_ids": list(ev.served_ids)}
                for ev in self.events
            ],
            "requests": {str(q): t for q, t in sorted(self.service_time.items())},
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def opt_edges_during(trace: OptTrace, t1: float, t2: float) -> EdgeSet:
    """Deduplicated graph edges traversed by any walk event inside [t1, t2]."""
    if t1 > t2:
        raise ValueError("interval start exceeds its end")
    edges: set[tuple[int, int]] = set()
    for ev in trace.events:
        if t1 - config.EPS_TIME <= ev.time <= t2 + config.EPS_TIME:
            for u, v in zip(ev.walk, ev.walk[1:]):
                if u != v:
                    edges.add((min(u, v), max(u, v)))
    return frozenset(edges)


# ---------------------------------------------------------------------------
# deadline mode
# ---------------------------------------------------------------------------


def opt_deadline(inst: Instance) -> OptTrace:
    if inst.mode != "deadline":
        raise ValueError("opt_deadline needs a deadline-mode instance")
    if len(inst.requests) > _DEADLINE_CAP:
        raise OracleCapError(
            f"opt_deadline caps at {_DEADLINE_CAP} requests, got {len(inst.requests)}"
        )
    m = build_metric(inst.graph)
    reqs = list(inst.requests)
    if not reqs:
        return OptTrace("deadline", inst.server_start, (), 0.0, 0.0, {})
    k = len(reqs)
    full = (1 << k) - 1
    release = [q.release for q in reqs]
    deadline = [q.deadline for q in reqs]
    point = [q.point for q in reqs]

    completion = [0.0] * (1 << k)
    for mask in range(1, 1 << k):
        low = mask & -mask
        completion[mask] = max(completion[mask ^ low], release[low.bit_length() - 1])

    INF = math.inf
    cost = [[INF] * k for _ in range(1 << k)]
    parent: list[list[int]] = [[-1] * k for _ in range(1 << k)]
    for i in range(k):
        # the first visit happens at max(release_i, -inf) = release_i
        if release[i] <= deadline[i] + config.EPS_TIME:
            cost[1 << i][i] = m.distance(inst.server_start, point[i])
    for mask in range(1, 1 << k):
        for last in range(k):
            c = cost[mask][last]
            if c == INF or not mask & (1 << last):
                continue
            t_done = completion[mask]
            for nxt in range(k):
                if mask & (1 << nxt):
                    continue
                if max(t_done, release[nxt]) > deadline[nxt] + config.EPS_TIME:
                    continue
                nmask = mask | (1 << nxt)
                nc = c + m.distance(point[last], point[nxt])
                if nc < cost[nmask][nxt] - 1e-15:
                    cost[nmask][nxt] = nc
                    parent[nmask][nxt] = last
    best_last = min(range(k), key=lambda i: (cost[full][i], i))
    assert cost[full][best_last] < INF, "deadline instances are always feasible"

    order = []
    mask, last = full, best_last
    while last != -1:
        order.append(last)
        mask, last = mask ^ (1 << last), parent[mask][last]
    order.reverse()

    events = []
    pos = inst.server_start
    t = -math.inf
    movement = 0.0
    service_time: dict[int, float] = {}
    for i in order:
        t = max(t, release[i])
        walk = m.shortest_path_nodes(pos, point[i])
        movement += walk_cost(m, walk)
        events.append(OptEvent(time=t, walk=tuple(walk), served_ids=(reqs[i].id,)))
        service_time[reqs[i].id] = t
        pos = point[i]
    return OptTrace(
        mode="deadline",
        start=inst.server_start,
        events=tuple(events),
        movement_cost=movement,
        delay_cost=0.0,
        service_time=service_time,
    )


# ---------------------------------------------------------------------------
# delay mode
# ---------------------------------------------------------------------------


class _BatchWalks:
    """Cheapest walks through point sets by bitmask DP, with order recovery."""

    def __init__(self, m: MetricSpace):
        self.m = m
        self.memo: dict[tuple[int, tuple[int, ...]], dict[int, float]] = {}
        self.orders: dict[tuple[int, tuple[int, ...], int], tuple[int, ...]] = {}

    def end_costs(self, start: int, pts: tuple[int, ...]) -> dict[int, float]:
        key = (start, pts)
        if key in self.memo:
            return self.memo[key]
        k = len(pts)
        dp = [[math.inf] * k for _ in range(1 << k)]
        par = [[None] * k for _ in range(1 << k)]
        for i in range(k):
            dp[1 << i][i] = self.m.distance(start, pts[i])
        for mask in range(1, 1 << k):
            for last in range(k):
                c = dp[mask][last]
                if c == math.inf or not mask & (1 << last):
                    continue
                for nxt in range(k):
                    if mask & (1 << nxt):
                        continue
                    nc = c + self.m.distance(pts[last], pts[nxt])
                    nmask = mask | (1 << nxt)
                    if nc < dp[nmask][nxt] - 1e-15:
                        dp[nmask][nxt] = nc
                        par[nmask][nxt] = last
        full = (1 << k) - 1
        out = {}
        for i in range(k):
            out[pts[i]] = dp[full][i]
            seq = []
            mask, last = full, i
            while last is not None:
                seq.append(pts[last])
                mask, last = mask ^ (1 << last), par[mask][last]
            self.orders[(start, pts, pts[i])] = tuple(reversed(seq))
        self.memo[key] = out
        return out

    def order(self, start: int, pts: tuple[int, ...], end: int) -> tuple[int, ...]:
        self.end_costs(start, pts)
        return self.orders[(start, pts, end)]


def opt_delay(inst: Instance) -> OptTrace:
    if inst.mode != "delay":
        raise ValueError("opt_delay needs a delay-mode instance")
    if len(inst.requests) > _DELAY_CAP:
        raise OracleCapError(
            f"opt_delay caps at {_DELAY_CAP} requests, got {len(inst.requests)}"
        )
    m = build_metric(inst.graph)
    reqs = list(inst.requests)
    if not reqs:
        return OptTrace("delay", inst.server_start, (), 0.0, 0.0, {})
    k = len(reqs)
    events = sorted({q.release for q in reqs})
    n_ev = len(events)
    delay_at = [[q.delay.value(t) if t >= q.release else math.inf for t in events] for q in reqs]
    released_mask = [0] * n_ev
    for j, t in enumerate(events):
        for i, q in enumerate(reqs):
            if q.release <= t + config.EPS_TIME:
                released_mask[j] |= 1 << i
    walks = _BatchWalks(m)
    full = (1 << k) - 1

    # states[(position, served_mask)] = (cost, parent_key, batch, batch_end)
    states: dict[tuple[int, int], float] = {(inst.server_start, 0): 0.0}
    back: dict[tuple[int, tuple[int, int]], tuple] = {}
    for j in range(n_ev):
        nxt: dict[tuple[int, int], float] = {}

        def consider(key, cost, parent_key, batch, order):
            if cost < nxt.get(key, math.inf) - 1e-15:
                nxt[key] = cost
                back[(j, key)] = (parent_key, batch, order)

        for (pos, served), cost in states.items():
            pending = released_mask[j] & ~served
            if j == n_ev - 1:
                # everything still pending must be served at the last event
                subsets = [pending]
            else:
                subsets = []
                s = pending
                while True:
                    subsets.append(s)
                    if s == 0:
                        break
                    s = (s - 1) & pending
            for sub in subsets:
                if sub == 0:
                    consider((pos, served), cost, (pos, served), 0, ())
                    continue
                batch_pts = tuple(sorted({reqs[i].point for i in range(k) if sub & (1 << i)}))
                extra_delay = sum(delay_at[i][j] for i in range(k) if sub & (1 << i))
                for end, wcost in walks.end_costs(pos, batch_pts).items():
                    consider(
                        (end, served | sub),
                        cost + wcost + extra_delay,
                        (pos, served),
                        sub,
                        walks.order(pos, batch_pts, end),
                    )
        states = nxt

    finals = {key: c for key, c in states.items() if key[1] == full}
    best_key = min(finals, key=lambda key: (finals[key], key))

    # backtrack
    steps = []
    key = best_key
    for j in range(n_ev - 1, -1, -1):
        parent_key, batch, order = back[(j, key)]
        steps.append((j, batch, order))
        key = parent_key
    steps.reverse()

    out_events = []
    movement = 0.0
    delay_cost = 0.0
    service_time: dict[int, float] = {}
    pos = inst.server_start
    for j, batch, order in steps:
        if not batch:
            continue
        walk = expand_hops(m, [pos] + list(order))
        movement += walk_cost(m, walk)
        served_ids = tuple(sorted(reqs[i].id for i in range(k) if batch & (1 << i)))
        for i in range(k):
            if batch & (1 << i):
                service_time[reqs[i].id] = events[j]
                delay_cost += delay_at[i][j]
        out_events.append(OptEvent(time=events[j], walk=tuple(walk), served_ids=served_ids))
        pos = walk[-1]
    return OptTrace(
        mode="delay",
        start=inst.server_start,
        events=tuple(out_events),
        movement_cost=movement,
        delay_cost=delay_cost,
        service_time=service_time,
    )
