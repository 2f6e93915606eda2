"""Request and instance model, on-disk JSON format, seeded generators.

Delay functions are restricted to piecewise-linear, continuous,
nondecreasing curves with a strictly positive final slope.  The class is
dense in the continuous nondecreasing functions and makes every event
time in the delay engine the solution of a linear equation, so
criticality detection is exact rather than a numeric root search.
"""

from __future__ import annotations

import bisect
import json
import random
from dataclasses import dataclass

from . import config
from .metric import WeightedGraph

__all__ = [
    "DeadlineRequest",
    "DelayFunction",
    "DelayRequest",
    "Instance",
    "InstanceFormatError",
    "parse_instance",
    "serialize_instance",
    "generate",
    "distinct_deadlines_normalize",
]


class InstanceFormatError(ValueError):
    """Raised on schema or semantic violations in an instance document."""


@dataclass(frozen=True)
class DeadlineRequest:
    id: int
    point: int
    release: float
    deadline: float

    def __post_init__(self):
        if self.deadline < self.release:
            raise InstanceFormatError(
                f"request {self.id}: deadline {self.deadline} precedes release {self.release}"
            )


@dataclass(frozen=True)
class DelayFunction:
    """Piecewise-linear nondecreasing delay, zero at release.

    ``breakpoints`` is the ordered list of (time, value) pairs starting at
    (release, 0); beyond the last breakpoint the curve continues with
    ``final_slope`` forever.
    """

    breakpoints: tuple[tuple[float, float], ...]
    final_slope: float

    def __post_init__(self):
        if not self.breakpoints:
            raise InstanceFormatError("delay function needs at least one breakpoint")
        object.__setattr__(
            self,
            "breakpoints",
            tuple((float(t), float(y)) for t, y in self.breakpoints),
        )
        if self.breakpoints[0][1] != 0.0:
            raise InstanceFormatError("delay must be zero at release")
        for (t0, y0), (t1, y1) in zip(self.breakpoints, self.breakpoints[1:]):
            if t1 <= t0:
                raise InstanceFormatError("delay breakpoint times must increase")
            if y1 < y0:
                raise InstanceFormatError("delay values must be nondecreasing")
        if self.final_slope <= 0:
            raise InstanceFormatError("final slope must be strictly positive")

    @property
    def release(self) -> float:
        return self.breakpoints[0][0]

    def value(self, t: float) -> float:
        """y(t); requires t >= release up to tolerance."""
        times = [bp[0] for bp in self.breakpoints]
        if t < times[0] - config.EPS_TIME:
            raise ValueError(f"delay evaluated at {t} before release {times[0]}")
        t = max(t, times[0])
        i = bisect.bisect_right(times, t) - 1
        t0, y0 = self.breakpoints[i]
        if i == len(self.breakpoints) - 1:
            return y0 + self.final_slope * (t - t0)
        t1, y1 = self.breakpoints[i + 1]
        return y0 + (y1 - y0) * (t - t0) / (t1 - t0)

    def slope_at(self, t: float) -> float:
        """Right-derivative at t (constant between breakpoints)."""
        times = [bp[0] for bp in self.breakpoints]
        t = max(t, times[0])
        i = bisect.bisect_right(times, t) - 1
        if i >= len(self.breakpoints) - 1:
            return self.final_slope
        t0, y0 = self.breakpoints[i]
        t1, y1 = self.breakpoints[i + 1]
        return (y1 - y0) / (t1 - t0)

    def first_time_at_least(self, c: float) -> float:
        """Earliest t with y(t) >= c; the inverse query used for counters."""
        if c <= 0:
            return self.release
        for (t0, y0), (t1, y1) in zip(self.breakpoints, self.breakpoints[1:]):
            if y1 >= c:
                if y1 == y0:
                    return t0
                return t0 + (c - y0) * (t1 - t0) / (y1 - y0)
        t0, y0 = self.breakpoints[-1]
        return t0 + (c - y0) / self.final_slope


@dataclass(frozen=True)
class DelayRequest:
    id: int
    point: int
    release: float
    delay: DelayFunction

    def __post_init__(self):
        if abs(self.delay.release - self.release) > config.EPS_TIME:
            raise InstanceFormatError(
                f"request {self.id}: delay curve starts at {self.delay.release}, "
                f"release is {self.release}"
            )


@dataclass(frozen=True)
class Instance:
    graph: WeightedGraph
    server_start: int
    mode: str  # "deadline" | "delay"
    requests: tuple

    def __post_init__(self):
        if self.mode not in ("deadline", "delay"):
            raise InstanceFormatError(f"unknown mode {self.mode!r}")
        if not (0 <= self.server_start < self.graph.node_count):
            raise InstanceFormatError("server_start out of node range")
        ids = [q.id for q in self.requests]
        if len(ids) != len(set(ids)):
            raise InstanceFormatError("request ids must be unique")
        want = DeadlineRequest if self.mode == "deadline" else DelayRequest
        for q in self.requests:
            if not isinstance(q, want):
                raise InstanceFormatError(
                    f"request {q.id} has wrong kind for mode {self.mode}"
                )
            if not (0 <= q.point < self.graph.node_count):
                raise InstanceFormatError(f"request {q.id} on invalid point {q.point}")


# ---------------------------------------------------------------------------
# JSON document format
# ---------------------------------------------------------------------------


def _expect_keys(obj: dict, required: set[str], where: str) -> None:
    keys = set(obj)
    if keys - required:
        raise InstanceFormatError(f"unknown fields in {where}: {sorted(keys - required)}")
    if required - keys:
        raise InstanceFormatError(f"missing fields in {where}: {sorted(required - keys)}")


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("top-level document must be an object")
    _expect_keys(doc, {"graph", "server_start", "mode", "requests"}, "document")
    gdoc = doc["graph"]
    if not isinstance(gdoc, dict):
        raise InstanceFormatError("graph must be an object")
    _expect_keys(gdoc, {"nodes", "edges"}, "graph")
    graph = WeightedGraph(
        node_count=int(gdoc["nodes"]),
        edges=tuple((int(u), int(v), float(w)) for u, v, w in gdoc["edges"]),
    )
    mode = doc["mode"]
    requests = []
    for rdoc in doc["requests"]:
        if not isinstance(rdoc, dict):
            raise InstanceFormatError("each request must be an object")
        if mode == "deadline":
            _expect_keys(rdoc, {"id", "point", "release", "deadline"}, "request")
            requests.append(
                DeadlineRequest(
                    id=int(rdoc["id"]),
                    point=int(rdoc["point"]),
                    release=float(rdoc["release"]),
                    deadline=float(rdoc["deadline"]),
                )
            )
        else:
            _expect_keys(rdoc, {"id", "point", "release", "delay"}, "request")
            ddoc = rdoc["delay"]
            if not isinstance(ddoc, dict):
                raise InstanceFormatError("delay must be an object")
            _expect_keys(ddoc, {"breakpoints", "final_slope"}, "delay")
            fn = DelayFunction(
                breakpoints=tuple((float(t), float(y)) for t, y in ddoc["breakpoints"]),
                final_slope=float(ddoc["final_slope"]),
            )
            requests.append(
                DelayRequest(
                    id=int(rdoc["id"]),
                    point=int(rdoc["point"]),
                    release=float(rdoc["release"]),
                    delay=fn,
                )
            )
    return Instance(
        graph=graph,
        server_start=int(doc["server_start"]),
        mode=mode,
        requests=tuple(requests),
    )


def serialize_instance(inst: Instance) -> str:
    doc = {
        "graph": {
            "nodes": inst.graph.node_count,
            "edges": [[u, v, w] for u, v, w in inst.graph.edges],
        },
        "server_start": inst.server_start,
        "mode": inst.mode,
        "requests": [],
    }
    for q in inst.requests:
        if inst.mode == "deadline":
            doc["requests"].append(
                {"id": q.id, "point": q.point, "release": q.release, "deadline": q.deadline}
            )
        else:
            doc["requests"].append(
                {
                    "id": q.id,
                    "point": q.point,
                    "release": q.release,
                    "delay": {
                        "breakpoints": [[t, y] for t, y in q.delay.breakpoints],
                        "final_slope": q.delay.final_slope,
                    },
                }
            )
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------------------
# seeded generation
# ---------------------------------------------------------------------------


def _random_connected_graph(rng: random.Random, n: int, weight_range) -> WeightedGraph:
    lo, hi = weight_range
    edges = []
    used = set()
    for v in range(1, n):
        u = rng.randrange(v)
        edges.append((u, v, rng.uniform(lo, hi)))
        used.add((u, v))
    extra = rng.randrange(max(1, n))
    while extra:
        u, v = rng.randrange(n), rng.randrange(n)
        key = (min(u, v), max(u, v))
        if u == v or key in used:
            extra -= 1
            continue
        used.add(key)
        edges.append((key[0], key[1], rng.uniform(lo, hi)))
        extra -= 1
    return WeightedGraph(node_count=n, edges=tuple(edges))


def _random_delay_function(rng: random.Random, release: float, horizon: float) -> DelayFunction:
    pts = [(release, 0.0)]
    t, y = release, 0.0
    for _ in range(rng.randrange(3)):
        t += rng.uniform(0.05, 0.3) * horizon
        y += rng.uniform(0.0, 5.0)
        pts.append((t, y))
    return DelayFunction(breakpoints=tuple(pts), final_slope=rng.uniform(0.2, 3.0))


def generate(
    seed: int,
    n_points: int,
    n_requests: int,
    mode: str,
    weight_range: tuple[float, float] = (1.0, 10.0),
    horizon: float = 100.0,
) -> Instance:
    """Deterministic-in-seed random instance on a connected graph."""
    if n_points <= 0 or n_requests < 0 or horizon <= 0:
        raise ValueError("generator parameters must be positive")
    rng = random.Random(seed)
    graph = _random_connected_graph(rng, n_points, weight_range)
    start = rng.randrange(n_points)
    requests = []
    for i in range(n_requests):
        point = rng.randrange(n_points)
        release = rng.uniform(0.0, 0.6 * horizon)
        if mode == "deadline":
            deadline = release + rng.uniform(0.01, 0.4) * horizon
            requests.append(
                DeadlineRequest(id=i, point=point, release=release, deadline=deadline)
            )
        else:
            requests.append(
                DelayRequest(
                    id=i,
                    point=point,
                    release=release,
                    delay=_random_delay_function(rng, release, horizon),
                )
            )
    return Instance(graph=graph, server_start=start, mode=mode, requests=tuple(requests))


def certification_chain(n_far: int = 5, base_deadline: float = 10.0) -> Instance:
    """Star instance that forces an upgrade-and-certify chain.

    A unit-distance trigger leaf starts a level-3 service with tree budget
    32; each weight-8 far leaf adds 8 to the tree, so the budget trips
    after the fourth far leaf, the remaining ones are upgraded instead of
    served, and their own deadlines later fire non-primary services.
    Useful for exercising certified services at sizes the exact offline
    oracle can still handle.
    """
    if n_far < 5:
        raise ValueError("need at least five far leaves to trip the budget")
    edges = [(0, 1, 1.0)] + [(0, 2 + i, 8.0) for i in range(n_far)]
    graph = WeightedGraph(node_count=2 + n_far, edges=tuple(edges))
    requests = [DeadlineRequest(id=0, point=1, release=0.0, deadline=base_deadline)]
    for i in range(n_far):
        requests.append(
            DeadlineRequest(
                id=1 + i, point=2 + i, release=0.0, deadline=base_deadline + 1.0 + i
            )
        )
    return Instance(
        graph=graph, server_start=0, mode="deadline", requests=tuple(requests)
    )


def investment_star(
    n_leaves: int = 50, leaf_weight: float = 4.0, slope: float = 1.0
) -> Instance:
    """Delay-mode star crowded enough to trip the prize-collecting budget.

    All leaves carry unit-slope requests from time zero with the server at
    the hub.  The first criticality fires at the hub's distance level, and
    connecting every leaf costs more than the service budget, so the
    forwarding-time search finds a finite crossing: some requests are
    served, the rest receive counter investments and level upgrades, and
    later services certify earlier ones.  Exercises the code paths that
    sparse random instances rarely reach.
    """
    if n_leaves * leaf_weight <= 48.0 * leaf_weight / 4:
        raise ValueError("too few leaves to exceed the service budget")
    edges = tuple((0, 1 + i, leaf_weight) for i in range(n_leaves))
    graph = WeightedGraph(node_count=1 + n_leaves, edges=edges)
    requests = tuple(
        DelayRequest(
            id=i,
            point=1 + i,
            release=0.0,
            delay=DelayFunction(breakpoints=((0.0, 0.0),), final_slope=slope),
        )
        for i in range(n_leaves)
    )
    return Instance(graph=graph, server_start=0, mode="delay", requests=requests)


def delay_certification_chain(far_slope: float = 0.5) -> Instance:
    """Delay-mode chain that certifies within the exact-oracle cap.

    A unit trigger leaf fires a level-3 service (budget 48).  Seven
    weight-8 leaves are eligible but their penalties cross the budget
    before any of them is worth connecting (7 penalties reach ~6.7 while
    an edge costs 8), so all seven are invested in and upgraded; their
    joint residual later fires a non-primary service that certifies the
    first one.
    """
    edges = [(0, 1, 1.0)] + [(0, 2 + i, 8.0) for i in range(7)]
    graph = WeightedGraph(node_count=9, edges=tuple(edges))
    requests = [
        DelayRequest(
            id=0,
            point=1,
            release=0.0,
            delay=DelayFunction(breakpoints=((0.0, 0.0),), final_slope=1.0),
        )
    ]
    for i in range(7):
        requests.append(
            DelayRequest(
                id=1 + i,
                point=2 + i,
                release=0.0,
                delay=DelayFunction(breakpoints=((0.0, 0.0),), final_slope=far_slope),
            )
        )
    return Instance(graph=graph, server_start=0, mode="delay", requests=tuple(requests))


def distinct_deadlines_normalize(inst: Instance) -> Instance:
    """Break deadline ties by id order with offsets below eps/|Q|.

    Within a tied group the lower id keeps the original deadline and each
    subsequent member moves later by one offset step, so release <=
    deadline is preserved.  No-op when deadlines are already distinct.
    """
    if inst.mode != "deadline":
        raise ValueError("deadline normalization applies to deadline instances")
    if not inst.requests:
        return inst
    step = config.EPS_TIME / (len(inst.requests) + 1)
    groups: dict[float, list[DeadlineRequest]] = {}
    for q in inst.requests:
        groups.setdefault(q.deadline, []).append(q)
    if all(len(g) == 1 for g in groups.values()):
        return inst
    replaced = {}
    for deadline, group in groups.items():
        for k, q in enumerate(sorted(group, key=lambda r: r.id)):
            if k:
                replaced[q.id] = DeadlineRequest(
                    id=q.id, point=q.point, release=q.release, deadline=deadline + k * step
                )
    new_requests = tuple(replaced.get(q.id, q) for q in inst.requests)
    return Instance(
        graph=inst.graph,
        server_start=inst.server_start,
        mode=inst.mode,
        requests=new_requests,
    )
