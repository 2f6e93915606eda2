"""A deadline run, service by service.

The lone-request walkthrough first: a request at distance 3 gets adjusted
level ceil(log2 3) = 2, so its deadline fires a primary level-5 service;
the server walks out, back, and relocates, paying 9 total.  Then a random
instance shows eligibility balls, budget breaks, and level upgrades.
"""

from metricserve.deadline_engine import run_deadline
from metricserve.instance import DeadlineRequest, Instance, generate
from metricserve.metric import WeightedGraph

path = WeightedGraph(node_count=3, edges=((0, 1, 1.0), (1, 2, 2.0)))
inst = Instance(
    graph=path,
    server_start=0,
    mode="deadline",
    requests=(DeadlineRequest(id=0, point=2, release=0.0, deadline=10.0),),
)
trace = run_deadline(inst)
s = trace.services[0]
print("lone request at distance 3:")
print(f"  service level {s.level}, primary={s.primary}")
print(f"  walk {list(s.walk)}, cost {s.cost}")
print(f"  server ends at node {s.end_position}\n")

inst = generate(seed=2024, n_points=8, n_requests=8, mode="deadline")
trace = run_deadline(inst)
print(f"random instance: {len(inst.requests)} requests, "
      f"{len(trace.services)} services, total cost {trace.total_cost:.3f}")
for s in trace.services:
    upgraded = set(s.eligible_ids) - set(s.served_ids)
    print(f"  t={s.time:7.3f} level {s.level:2d} {'primary  ' if s.primary else 'secondary'}"
          f" serves {list(s.served_ids)}"
          + (f", upgrades {sorted(upgraded)} to {s.level + 1}" if upgraded else ""))
for qid, t in sorted(trace.service_time.items()):
    q = next(r for r in inst.requests if r.id == qid)
    assert q.release <= t <= q.deadline
print("every request served inside its window")
