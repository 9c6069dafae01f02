"""
Hardware-aware search and the accuracy/throughput front
=======================================================

Deployment cares about speed as well as accuracy. This script fits two
small surrogates (accuracy and device throughput), saves them to disk,
reloads them and searches with a weighted-product reward that trades
accuracy against a throughput target. The sampled cloud then yields the
non-dominated front.
"""

import tempfile
from pathlib import Path

import numpy as np

from anbkit import data, surrogate
from anbkit.archspace import SpaceDef, encode, parse_arch
from anbkit.optim import Objective, pareto_table, simulate_runs

# ----------------------------------------------------------------------
# Collect one table per metric and fit a booster on each. The default
# config is plenty for a demo-sized table.
# ----------------------------------------------------------------------
space = SpaceDef()
oracles = data.default_oracles(space, devices=("A100",), seed=0)
tables = data.collect(space, 1200, oracles, np.random.default_rng(7))

models = {}
for name in ("ANB-Acc", "ANB-A100-Thr"):
    ds = tables[name]
    X, y = data.design_matrix(ds, space)
    models[name] = surrogate.fit(X, y, metric_name=name)
    print(f"fitted {name} on {len(y)} rows")

# ----------------------------------------------------------------------
# Persistence: the JSON format round-trips bit for bit, so a reloaded
# model answers exactly like the original.
# ----------------------------------------------------------------------
outdir = Path(tempfile.mkdtemp(prefix="pareto-demo-"))
for name, model in models.items():
    surrogate.save(model, outdir / f"{name}.json")
acc_model = surrogate.load(outdir / "ANB-Acc.json")
thr_model = surrogate.load(outdir / "ANB-A100-Thr.json")

probe = encode(space, parse_arch("e6k5l3se1," * 6 + "e6k5l3se1", space))
same = acc_model.predict(probe)
orig = models["ANB-Acc"].predict(probe)
print(f"\nreloaded model agrees with original: {same == orig}")


# ----------------------------------------------------------------------
# The evaluator answers (accuracy, throughput) from the reloaded
# surrogates; the objective folds both into one reward.
# ----------------------------------------------------------------------
def evaluator(arch):
    vec = encode(space, arch)
    return acc_model.predict(vec), thr_model.predict(vec)


objective = Objective(mode="bi", perf_metric="throughput",
                      target=4000.0, weight=-0.07)
result = simulate_runs("reinforce", space, evaluator, 600,
                       seeds=(0, 1), objective=objective)
print(f"\nbi-objective reinforce, final mean reward "
      f"{result.mean_incumbent[-1]:.4f}")

# ----------------------------------------------------------------------
# Every sampled point is a candidate; the front keeps the ones no other
# point beats on both axes.
# ----------------------------------------------------------------------
rows = [(str(s.arch), s.accuracy, s.perf)
        for t in result.trajectories for s in t.steps]
front = pareto_table(rows, perf_direction="max")
print(f"\nfront: {len(front)} of {len(rows)} sampled points")
print(f"{'accuracy':>10s} {'img/s':>8s}   architecture")
for arch, acc, thr in front[:: max(1, len(front) // 8)]:
    print(f"{acc:10.4f} {thr:8.0f}   {arch}")
