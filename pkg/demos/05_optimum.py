"""The exact offline optimum and the empirical competitive ratio.

For deadlines the optimum is a bitmask DP over (served set, last stop):
movement is instantaneous, so feasibility only depends on greedy visit
times.  For delay, some optimal solution serves whole batches exactly at
release times (delaying a batch past its latest member's release never
helps), which turns the search into a finite DP as well.
"""

from metricserve.deadline_engine import run_deadline
from metricserve.delay_engine import run_delay
from metricserve.instance import generate
from metricserve.offline_oracle import opt_deadline, opt_delay

print("deadline instances:")
for seed in range(5):
    inst = generate(seed=seed, n_points=7, n_requests=6, mode="deadline")
    alg = run_deadline(inst).total_cost
    opt = opt_deadline(inst)
    print(f"  seed {seed}: ALG {alg:8.3f}  OPT {opt.movement_cost:8.3f}  "
          f"ratio {alg / opt.movement_cost if opt.movement_cost else 1:6.3f}")

print("\ndelay instances (movement + delay):")
for seed in range(5):
    inst = generate(seed=seed, n_points=6, n_requests=4, mode="delay")
    alg = run_delay(inst).total_cost
    opt = opt_delay(inst)
    print(f"  seed {seed}: ALG {alg:8.3f}  OPT {opt.total_cost:8.3f}  "
          f"ratio {alg / opt.total_cost if opt.total_cost else 1:6.3f}")

inst = generate(seed=3, n_points=7, n_requests=6, mode="deadline")
opt = opt_deadline(inst)
print("\none optimum timeline (time, walk, served):")
for ev in opt.events:
    print(f"  t={ev.time:7.3f} walk {list(ev.walk)} serves {list(ev.served_ids)}")
