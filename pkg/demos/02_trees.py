"""Steiner trees and prize-collecting trees, approximate and exact.

The online engines only ever call the polynomial approximations; the
exact solvers exist to audit them.  This script shows both pairs side by
side on a random metric, including the penalty/serve trade-off that
drives the delay engine's time forwarding.
"""

import random

from metricserve.instance import generate
from metricserve.metric import build_metric
from metricserve.steiner import pcst_approx, pcst_exact, steiner_approx, steiner_exact

rng = random.Random(7)
inst = generate(seed=42, n_points=9, n_requests=0, mode="deadline")
m = build_metric(inst.graph)

terminals = set(rng.sample(range(9), 5))
approx = steiner_approx(m, terminals)
exact = steiner_exact(m, terminals)
print(f"terminals {sorted(terminals)}")
print(f"steiner approx cost {approx.cost:.3f}, exact cost {exact.cost:.3f}, "
      f"ratio {approx.cost / exact.cost:.3f} (guarantee: 2)")
print(f"approx tree edges: {sorted(approx.tree_edges)}")

root = 0
print("\nprize-collecting, root 0: scaling all penalties")
for scale in (0.1, 0.5, 2.0, 10.0):
    pen = {t: scale * m.distance(root, t) for t in terminals}
    a = pcst_approx(m, terminals, pen, root)
    e = pcst_exact(m, terminals, pen, root)
    print(f"  scale {scale:5.1f}: approx total {a.total_cost:8.3f} "
          f"(serves {len(a.served)}/{len(terminals)}), exact {e.total_cost:8.3f}, "
          f"ratio {a.total_cost / e.total_cost if e.total_cost else 1.0:.3f}")
print("low penalties: pay them all; high penalties: connect everything")
