"""A delay run: criticality, counters, time forwarding, relocation.

First the unit walkthrough: one request at distance 1 with unit-slope
delay.  Its residual reaches the level-0 threshold at t = 1, firing a
level-3 service that serves it and relocates into the ball holding the
concentrated residual.  Then a random instance shows investment counters
splitting cost between movement and forwarded delay.
"""

from metricserve.delay_engine import run_delay
from metricserve.instance import DelayFunction, DelayRequest, Instance, generate
from metricserve.metric import WeightedGraph

g = WeightedGraph(node_count=2, edges=((0, 1, 1.0),))
inst = Instance(
    graph=g,
    server_start=0,
    mode="delay",
    requests=(
        DelayRequest(
            id=0, point=1, release=0.0,
            delay=DelayFunction(breakpoints=((0.0, 0.0),), final_slope=1.0),
        ),
    ),
)
trace = run_delay(inst)
s = trace.services[0]
print("unit walkthrough:")
print(f"  critical at t={s.time}, service level {s.level}, primary={s.primary}")
print(f"  walk {list(s.walk)} (tour + relocation), movement {s.movement_cost}")
print(f"  delay paid by the request: {trace.delay_cost}\n")

inst = generate(seed=99, n_points=7, n_requests=6, mode="delay")
trace = run_delay(inst)
print(f"random instance: {len(trace.services)} services, "
      f"movement {trace.movement_cost:.3f} + delay {trace.delay_cost:.3f} "
      f"= {trace.total_cost:.3f}")
for s in trace.services:
    reloc = f" -> relocate to {s.relocation_target}" if s.relocation_target is not None else ""
    tau = "inf" if s.forwarding_time == float("inf") else f"{s.forwarding_time:.3f}"
    print(f"  t={s.time:7.3f} level {s.level:2d} serves {list(s.served_ids)},"
          f" invests {s.invest_increment:6.3f}, forwards to {tau}{reloc}")
print(f"final counters: { {k: round(v, 3) for k, v in sorted(trace.counters.items())} }")
