"""Four layouts, one budget.

Each algorithm sees only the topology (plus signal strengths) of the same
u-shape network and gets the same number of evaluation intervals. After
every interval the boundary of its drawing is compared with the true one.

    python3 demos/algorithm_race.py --budget 30
"""
import argparse

from cncah.criteria import TerminationCriteria
from cncah.harness import run_experiment
from cncah.topogen import generate_instance

ap = argparse.ArgumentParser()
ap.add_argument("--shape", default="u-shape")
ap.add_argument("--nodes", type=int, default=300)
ap.add_argument("--budget", type=int, default=30)
ap.add_argument("--seed", type=int, default=1)
args = ap.parse_args()

topo, truth, _, _ = generate_instance(args.shape, args.nodes, 8, args.seed)
crit = TerminationCriteria(max_iters=args.budget, target_sensitivity=0.9)

print(f"{'algorithm':10} {'stop':10} {'iters':>5} {'sens':>6} {'spec':>6} {'acc':>6}  best sens")
for alg in ("wkkms", "kk", "fr", "dh"):
    res = run_experiment(topo, truth, alg, crit, seed=args.seed)
    f = res.final
    best = max(r.sensitivity for r in res.log.rows)
    print(f"{alg:10} {res.stop_reason:10} {f.iter:5d} {f.sensitivity:6.3f} "
          f"{f.specificity:6.3f} {f.accuracy:6.3f}  {best:.3f}")

# the per-interval trace is a CSV with the run settings as '# key=value' lines
print()
print("\n".join(res.log.to_csv().splitlines()[-3:]))
