"""
Efficient points of a two-objective instance
============================================

One efficient (Pareto) point is found by minimizing the objectives one at a
time, each stage constrained to not worsen any objective already settled.
A grid audit then double-checks efficiency: no feasible grid point may
dominate the returned point.
"""

import csv
import tempfile
from pathlib import Path

import numpy as np

from fsipp import instances
from fsipp.multiobj import (efficiency_audit, epsilon_constraint_solve,
                            image_grid)

mprob, u0, opts = instances.biobjective_case1()
print(f"{mprob.t} objectives in {mprob.m} variables, start at {u0}")

result = epsilon_constraint_solve(mprob, u0, opts)
for stage, point, value in result.path:
    print(f"  stage {stage}: point {np.round(point, 4)},"
          f" stage value {value:.6f}")
print("stopped by:", result.stopped_by)
print("final point:", np.round(result.final_point, 4))
print("objective vector:", np.round(result.objective_vector, 4))

# ---------------------------------------------------------------------------
# Audit: sample a box around the interesting region on a 200 x 200 grid and
# verify no feasible sample dominates the final point in every objective.
# ---------------------------------------------------------------------------
box = ((-2.7, 0.75), (-0.65, 2.7))
ok = efficiency_audit(mprob, result.final_point, grid_size=200, box=box)
print("efficiency audit over the box:", "passed" if ok else "FAILED")

# ---------------------------------------------------------------------------
# The same grid machinery exports the objective image for plotting: one row
# per sample with a feasibility flag and all objective values.
# ---------------------------------------------------------------------------
points, feasible, values = image_grid(mprob, box, grid_size=60)
out = Path(tempfile.mkdtemp()) / "image_grid.csv"
with out.open("w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["x1", "x2", "feasible", "objective1", "objective2"])
    for x, flag, f in zip(points, feasible, values):
        writer.writerow([x[0], x[1], int(flag), f[0], f[1]])
print(f"wrote {feasible.sum()} feasible / {len(points)} sampled rows to {out}")
