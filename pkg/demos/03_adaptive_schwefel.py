"""Grow a design on a wiggly 1-D function with three adaptive strategies.

Each run starts from the default initial design and adds one point per
iteration until the reference MAE drops below 0.01 or 50 samples are in.
Cross-validation Voronoi (CVD) tends to get there first here; MEPE and
SSA follow a few samples behind.
"""

from artifact.adaptive import StoppingRule, make_reference, run_adaptive_loop
from artifact.benchfns import get_problem

problem = get_problem("schwefel1d")
reference = make_reference(problem)
rule = StoppingRule(max_samples=50, metric="mae", threshold=0.01)

for strategy in ("cvd", "mepe", "ssa"):
    hits = []
    for seed in range(3):
        rec = run_adaptive_loop(problem, "ok", strategy, rule, seed, reference=reference)
        hits.append(rec.samples_to_threshold(rule))
    print(f"{strategy:>5}: samples to MAE < 0.01 -> {hits}")

# a single run, step by step
rec = run_adaptive_loop(problem, "ok", "cvd", rule, 0, reference=reference)
for row in rec.rows[1:6]:
    x = float(row["point"].reshape(-1)[0])
    print(f"m={row['m']:3d}  added x={x:8.3f}  mae={row['metrics']['mae']:.4f}")
