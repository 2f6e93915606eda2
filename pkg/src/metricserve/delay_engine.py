"""Residual-delay-triggered online service runs.

Each pending request carries an investment counter; its residual delay
at time t is the accrued delay minus the counter, floored at zero.  A
level becomes critical when the total residual of requests with adjusted
level at most that level reaches ``2**level``; the run loop fires a
service at the earliest such crossing, at the maximum critical level.

A service at level L (= critical level + 3):

1. collects triggers (adjusted level <= L - 3, positive residual) and is
   primary when every trigger's plain level sits below L - 4;
2. for a primary service, searches for a relocation center whose
   ``2**(L-8)`` ball holds more than ``2**(L-4)`` of the triggers'
   residual (most residual wins, ties to the lowest node id);
3. zeroes the residual of every eligible request (adjusted level <= L)
   by raising counters to the current delay;
4. forwards time: finds the first moment the prize-collecting tree over
   the eligible set, with penalties equal to the delay growth past the
   counters, costs at least ``6 * 2**L``; serves the tree's side of
   that solution by a depth-first tour, and pays the penalty side by
   raising counters to the forwarded delay;
5. upgrades unserved eligible requests to level L + 1 and finally moves
   to the relocation center when one was found.

When the prize-collecting cost never reaches the budget (all penalties
eventually huge, yet connecting everything stays cheap) the forwarding
time is infinite and the solution at the probe horizon serves every
eligible request, so nothing is left to invest in.

Between releases, breakpoints, and counter crossings every total
residual is linear in time, so crossings are solved exactly; the
forwarding-time search scans breakpoints and bisects inside the first
crossing segment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from . import config
from .instance import DelayRequest, Instance
from .levels import BOTTOM, Level, adjusted_level, clamp_bottom, level_le
from .metric import MetricSpace, build_metric, complete_graph_on
from .deadline_engine import min_level
from .steiner import PcstSolution, pcst_approx
from .walks import expand_hops, tree_dfs_nodes, walk_cost

__all__ = ["CriticalEvent", "DelayServiceRecord", "DelayTrace", "DelayEngine", "run_delay"]


@dataclass(frozen=True)
class CriticalEvent:
    time: float
    level: int


@dataclass(frozen=True)
class DelayServiceRecord:
    service_id: int
    time: float
    level: int
    start_position: int
    trigger_ids: tuple[int, ...]
    primary: bool
    relocation_target: int | None
    eligible_ids: tuple[int, ...]
    served_ids: tuple[int, ...]
    forwarding_time: float
    reset_increment: float
    invest_increment: float
    counter_increments: dict[int, float]
    trigger_residuals: dict[int, float]
    eligible_ctr_before: dict[int, float]
    walk: tuple[int, ...]
    movement_cost: float
    cost: float
    end_position: int

    def to_doc(self) -> dict:
        return {
            "service_id": self.service_id,
            "time": self.time,
            "level": self.level,
            "start_position": self.start_position,
            "trigger_ids": list(self.trigger_ids),
            "primary": self.primary,
            "relocation_target": self.relocation_target,
            "eligible_ids": list(self.eligible_ids),
            "served_ids": list(self.served_ids),
            # null marks a service whose prize-collecting cost never reaches
            # the budget (it serves every eligible request)
            "forwarding_time": self.forwarding_time
            if math.isfinite(self.forwarding_time)
            else None,
            "reset_increment": self.reset_increment,
            "invest_increment": self.invest_increment,
            "counter_increments": {str(k): v for k, v in sorted(self.counter_increments.items())},
            "walk": list(self.walk),
            "movement_cost": self.movement_cost,
            "cost": self.cost,
            "end_position": self.end_position,
        }


@dataclass(frozen=True)
class DelayTrace:
    mode: str
    services: tuple[DelayServiceRecord, ...]
    service_time: dict[int, float]
    serving_service: dict[int, int]
    movement_cost: float
    delay_cost: float
    total_cost: float
    counters: dict[int, float]
    final_position: int
    horizon_exhausted: bool
    pending_ids: tuple[int, ...]

    def to_json(self) -> str:
        doc = {
            "mode": self.mode,
            "movement_cost": self.movement_cost,
            "delay_cost": self.delay_cost,
            "total_cost": self.total_cost,
            "final_position": self.final_position,
            "horizon_exhausted": self.horizon_exhausted,
            "pending_ids": list(self.pending_ids),
            "counters": {str(k): v for k, v in sorted(self.counters.items())},
            "services": [s.to_doc() for s in self.services],
            "requests": {
                str(qid): {
                    "service_time": self.service_time[qid],
                    "serving_service": self.serving_service[qid],
                }
                for qid in sorted(self.service_time)
            },
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"


class DelayEngine:
    def __init__(self, m: MetricSpace, start: int, request_regime: bool = False):
        self.m = m
        self.position = start
        self.initial_position = start
        self.request_regime = request_regime
        self.level_floor = min_level(m)
        self.requests: dict[int, DelayRequest] = {}
        self.levels: dict[int, Level] = {}
        self.counters: dict[int, float] = {}
        self.pending: set[int] = set()
        self.records: list[DelayServiceRecord] = []
        self.service_time: dict[int, float] = {}
        self.serving_service: dict[int, int] = {}

    # -- online interface ---------------------------------------------------

    def reveal(self, q: DelayRequest) -> None:
        self.requests[q.id] = q
        self.levels[q.id] = BOTTOM
        self.counters[q.id] = 0.0
        self.pending.add(q.id)

    def residual(self, qid: int, t: float) -> float:
        y = self.requests[qid].delay.value(t)
        return max(y - self.counters[qid], 0.0)

    def adjusted_level_of(self, qid: int) -> Level:
        q = self.requests[qid]
        return adjusted_level(self.levels[qid], self.m.distance(self.position, q.point))

    def clamped_alevel(self, qid: int) -> int:
        return clamp_bottom(self.adjusted_level_of(qid), self.level_floor)

    def total_residual(self, level: int, t: float) -> float:
        return math.fsum(
            self.residual(qid, t)
            for qid in self.pending
            if self.clamped_alevel(qid) <= level
        )

    def max_critical_level(self, t: float) -> int | None:
        """Largest level whose total residual has reached its threshold."""
        if not self.pending:
            return None
        total = math.fsum(self.residual(qid, t) for qid in self.pending)
        if total <= config.EPS_VAL:
            return None
        cap = max(
            max(self.clamped_alevel(qid) for qid in self.pending),
            math.ceil(math.log2(total)) + 1,
        )
        for level in range(cap, self.level_floor - 1, -1):
            if self.total_residual(level, t) >= 2.0**level - config.EPS_VAL:
                return level
        return None

    # -- critical-event search ------------------------------------------------

    def next_critical_event(self, from_t: float, until: float) -> CriticalEvent | None:
        """Earliest crossing of some level's threshold in (from_t, until].

        ``until`` may be ``math.inf``; the tail past the last breakpoint is
        handled analytically (all delay slopes are constant there).
        Only currently pending requests participate; the runner advances
        segment by segment between releases.
        """
        if not self.pending:
            return None
        cuts: set[float] = set()
        for qid in self.pending:
            fn = self.requests[qid].delay
            for bp_t, _ in fn.breakpoints:
                if from_t < bp_t < until:
                    cuts.add(bp_t)
            tc = fn.first_time_at_least(self.counters[qid])
            if from_t < tc < until:
                cuts.add(tc)
        boundaries = sorted(cuts) + [until]
        s0 = from_t
        for s1 in boundaries:
            t_star = self._segment_crossing(s0, s1)
            if t_star is not None:
                level = self.max_critical_level(t_star)
                assert level is not None
                return CriticalEvent(time=t_star, level=level)
            s0 = s1
            if s0 >= until:
                break
        return None

    def _segment_crossing(self, s0: float, s1: float) -> float | None:
        """Earliest threshold crossing inside [s0, s1]; residuals are linear."""
        per_level: dict[int, tuple[float, float]] = {}
        for qid in self.pending:
            fn = self.requests[qid].delay
            y0 = fn.value(s0)
            ctr = self.counters[qid]
            if y0 >= ctr - config.EPS_VAL:
                val = max(y0 - ctr, 0.0)
                slope = fn.slope_at(s0)
            else:
                val, slope = 0.0, 0.0
            lv = self.clamped_alevel(qid)
            v, s = per_level.get(lv, (0.0, 0.0))
            per_level[lv] = (v + val, s + slope)
        best: float | None = None
        acc_v, acc_s = 0.0, 0.0
        for lv in sorted(per_level):
            dv, ds = per_level[lv]
            acc_v += dv
            acc_s += ds
            threshold = 2.0**lv
            if acc_v >= threshold - config.EPS_VAL:
                cand = s0
            elif acc_s > 0:
                cand = s0 + (threshold - acc_v) / acc_s
            else:
                continue
            if cand <= s1 + config.EPS_TIME and (best is None or cand < best):
                best = cand
        return best

    # -- the service ----------------------------------------------------------

    def upon_critical(self, critical_level: int, t: float) -> DelayServiceRecord:
        if self.max_critical_level(t) is None:
            raise RuntimeError("scheduler bug: no level is critical now")
        service_level = critical_level + 3
        a = self.position
        budget = 6.0 * 2.0**service_level

        triggers = sorted(
            qid
            for qid in self.pending
            if self.clamped_alevel(qid) <= critical_level
            and self.residual(qid, t) > config.EPS_VAL
        )
        assert triggers, "a critical level implies positive residual below it"
        trigger_residuals = {qid: self.residual(qid, t) for qid in triggers}
        primary = all(
            self.levels[qid] is BOTTOM or self.levels[qid] < service_level - 4
            for qid in triggers
        )

        relocation = None
        if primary:
            ball_r = 2.0 ** (service_level - 8)
            need = 2.0 ** (service_level - 4)
            # Candidates closer than the relocation lower bound are excluded
            # up front.  Above the clamped levels the residual bound around
            # the server makes such candidates unable to qualify anyway; at
            # clamped levels the floor rule would otherwise admit zero-length
            # relocations.
            min_dist = 2.0 ** (service_level - 5) - 2.0 ** (service_level - 8)
            best_mass = need
            for v in self._relocation_candidates():
                if self.m.distance(a, v) < min_dist - config.EPS_GEO:
                    continue
                mass = math.fsum(
                    trigger_residuals[qid]
                    for qid in triggers
                    if self.m.distance(v, self.requests[qid].point)
                    <= ball_r + config.EPS_GEO
                )
                if mass > best_mass + config.EPS_VAL:
                    best_mass = mass
                    relocation = v

        eligible = sorted(
            qid for qid in self.pending if level_le(self.adjusted_level_of(qid), service_level)
        )
        eligible_ctr_before = {qid: self.counters[qid] for qid in eligible}
        counter_increments: dict[int, float] = {}
        reset_increment = 0.0
        for qid in eligible:
            inc = max(0.0, self.requests[qid].delay.value(t) - self.counters[qid])
            if inc > 0:
                self.counters[qid] += inc
                counter_increments[qid] = counter_increments.get(qid, 0.0) + inc
                reset_increment += inc

        tau, solution, sub_points = self._forwarding_time(eligible, a, budget, t)
        served_points = set(solution.served)
        if sub_points is not None:
            served_points = {sub_points[i] for i in served_points}
        served = [qid for qid in eligible if self.requests[qid].point in served_points]

        invest_increment = 0.0
        for qid in eligible:
            if qid in served:
                continue
            assert math.isfinite(tau), "an infinite forwarding time serves everything"
            inc = max(0.0, self.requests[qid].delay.value(tau) - self.counters[qid])
            if inc > 0:
                self.counters[qid] += inc
                counter_increments[qid] = counter_increments.get(qid, 0.0) + inc
                invest_increment += inc
            self.levels[qid] = service_level + 1

        tree_edges = solution.tree_edges
        if sub_points is not None:
            tree_edges = frozenset(
                (min(sub_points[i], sub_points[j]), max(sub_points[i], sub_points[j]))
                for i, j in tree_edges
            )
        tour = tree_dfs_nodes(tree_edges, a)
        hops = list(tour)
        if relocation is not None:
            hops.append(relocation)
        walk = expand_hops(self.m, hops)
        movement = walk_cost(self.m, walk)

        sid = len(self.records)
        for qid in served:
            self.pending.discard(qid)
            self.service_time[qid] = t
            self.serving_service[qid] = sid
        if relocation is not None:
            self.position = relocation

        record = DelayServiceRecord(
            service_id=sid,
            time=t,
            level=service_level,
            start_position=a,
            trigger_ids=tuple(triggers),
            primary=primary,
            relocation_target=relocation,
            eligible_ids=tuple(eligible),
            served_ids=tuple(sorted(served)),
            forwarding_time=tau,
            reset_increment=reset_increment,
            invest_increment=invest_increment,
            counter_increments=counter_increments,
            trigger_residuals=trigger_residuals,
            eligible_ctr_before=eligible_ctr_before,
            walk=tuple(walk),
            movement_cost=movement,
            cost=movement + reset_increment + invest_increment,
            end_position=self.position,
        )
        self.records.append(record)
        return record

    # -- internals ------------------------------------------------------------

    def _relocation_candidates(self) -> list[int]:
        if not self.request_regime:
            return list(range(self.m.n))
        released = {self.requests[qid].point for qid in self.requests}
        released.add(self.initial_position)
        return sorted(released)

    def _pcst_space(self, root: int):
        """Metric, root, and point mapping the prize-collecting call runs on."""
        if not self.request_regime:
            return self.m, root, None
        released = {self.requests[qid].point for qid in self.requests}
        released.add(self.initial_position)
        sub_g, pts = complete_graph_on(self.m, sorted(released))
        sub_m = build_metric(sub_g)
        index = {p: i for i, p in enumerate(pts)}
        return sub_m, index[root], pts

    def _forwarding_time(self, eligible: list[int], root: int, budget: float, t: float):
        """First t' >= t at which the prize-collecting cost reaches the budget.

        Returns (tau, solution, sub_points); ``tau`` is ``inf`` when no
        crossing exists, in which case the solution serves all eligible
        points.  ``sub_points`` maps submetric indices back to graph points
        under the request regime (None otherwise).
        """
        space, space_root, pts = self._pcst_space(root)
        index = {p: i for i, p in enumerate(pts)} if pts is not None else None

        by_point: dict[int, list[int]] = {}
        for qid in eligible:
            by_point.setdefault(self.requests[qid].point, []).append(qid)
        terminals = {
            index[p] if index is not None else p for p in by_point
        }

        def evaluate(t_prime: float) -> PcstSolution:
            penalties = {}
            for p, qids in by_point.items():
                pen = math.fsum(
                    max(0.0, self.requests[qid].delay.value(t_prime) - self.counters[qid])
                    for qid in qids
                )
                penalties[index[p] if index is not None else p] = pen
            return pcst_approx(space, terminals, penalties, space_root)

        if not eligible:
            return t, evaluate(t), pts

        w_total = space.total_weight()
        t_big = max(
            self.requests[qid].delay.first_time_at_least(
                self.counters[qid] + budget + 3.0 * w_total + 1.0
            )
            for qid in eligible
        )
        t_big = max(t_big, t)
        cuts = {
            bp_t
            for qid in eligible
            for bp_t, _ in self.requests[qid].delay.breakpoints
            if t < bp_t < t_big
        }
        for qid in eligible:
            # counters invested past the current delay kink the penalty there
            tc = self.requests[qid].delay.first_time_at_least(self.counters[qid])
            if t < tc < t_big:
                cuts.add(tc)
        probes = sorted(cuts) + [t_big]

        sol = evaluate(t)
        if sol.total_cost >= budget - config.EPS_VAL:
            return t, sol, pts
        lo = t
        crossed = None
        for p in probes:
            sol_p = evaluate(p)
            if sol_p.total_cost >= budget - config.EPS_VAL:
                crossed = p
                break
            lo = p
        if crossed is None:
            final = evaluate(t_big)
            assert {self.requests[qid].point for qid in eligible} <= (
                {pts[i] for i in final.served} if pts is not None else set(final.served)
            ), "past the probe horizon an unserved terminal forces a crossing"
            return math.inf, final, pts
        hi = crossed
        while hi - lo > config.EPS_TIME:
            mid = 0.5 * (lo + hi)
            if evaluate(mid).total_cost >= budget - config.EPS_VAL:
                hi = mid
            else:
                lo = mid
        return hi, evaluate(hi), pts


def run_delay(
    inst: Instance, request_regime: bool = False, horizon: float | None = None
) -> DelayTrace:
    """Alternate crossing detection and services until everything is served.

    With a finite ``horizon`` the run may stop early and flag
    ``horizon_exhausted`` with the still-pending ids; with the default
    unbounded horizon positive final slopes guarantee completion.
    """
    if inst.mode != "delay":
        raise ValueError("run_delay needs a delay-mode instance")
    m = build_metric(inst.graph)
    engine = DelayEngine(m, inst.server_start, request_regime=request_regime)
    limit = math.inf if horizon is None else horizon
    releases = sorted(inst.requests, key=lambda q: (q.release, q.id))
    idx = 0
    t = -math.inf
    guard = 200 * (len(inst.requests) + 1)
    exhausted = False
    while True:
        guard -= 1
        if guard < 0:
            raise RuntimeError("service cascade failed to terminate")
        while True:
            guard -= 1
            if guard < 0:
                raise RuntimeError("service cascade failed to terminate")
            level = engine.max_critical_level(t) if t > -math.inf else None
            if level is None:
                break
            engine.upon_critical(level, t)
        next_release = releases[idx].release if idx < len(releases) else math.inf
        until = min(next_release, limit)
        event = engine.next_critical_event(t, until) if engine.pending else None
        if event is not None and event.time < next_release - config.EPS_TIME:
            t = event.time
            engine.upon_critical(event.level, t)
            continue
        if next_release <= limit and idx < len(releases):
            # releases first at equal timestamps; a tied crossing fires as a
            # cascade right after the reveal
            t = next_release
            while idx < len(releases) and releases[idx].release <= t + config.EPS_TIME:
                engine.reveal(releases[idx])
                idx += 1
            continue
        if event is not None and event.time <= limit + config.EPS_TIME:
            t = event.time
            engine.upon_critical(event.level, t)
            continue
        if engine.pending or idx < len(releases):
            exhausted = True
        break
    movement = math.fsum(r.movement_cost for r in engine.records)
    counter_total = math.fsum(
        r.reset_increment + r.invest_increment for r in engine.records
    )
    delay_cost = math.fsum(
        engine.requests[qid].delay.value(st) for qid, st in engine.service_time.items()
    )
    pending_ids = tuple(
        sorted(set(engine.pending) | {q.id for q in releases[idx:]})
    )
    assert counter_total >= 0
    return DelayTrace(
        mode="delay",
        services=tuple(engine.records),
        service_time=dict(engine.service_time),
        serving_service=dict(engine.serving_service),
        movement_cost=movement,
        delay_cost=delay_cost,
        total_cost=movement + delay_cost,
        counters=dict(engine.counters),
        final_position=engine.position,
        horizon_exhausted=exhausted,
        pending_ids=pending_ids,
    )
