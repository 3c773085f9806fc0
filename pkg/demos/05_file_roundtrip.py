"""
Problem files, canonical reports and the command line
=====================================================

Problems travel as JSON documents validated against a schema; every command
emits a canonical JSON report (sorted keys, stable formatting) whose hash
and exit code scripts can rely on.  This demo drives the same entry point
the `fsipp` console script uses, entirely in-process.
"""

import json
import tempfile
from pathlib import Path

from fsipp import instances
from fsipp.cli import main, problem_sha256, problem_to_doc

workdir = Path(tempfile.mkdtemp())
prob, opts = instances.quarter_circle_problem()
doc = problem_to_doc(prob, options={"R": opts.R, "g_star": opts.g_star,
                                    "k_min": opts.k, "k_max": opts.k})
problem_path = workdir / "quarter.json"
problem_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
print("problem file:", problem_path)
print("sha256:", problem_sha256(doc))

# ---------------------------------------------------------------------------
# classify prints its findings and the route tag to stdout.
# ---------------------------------------------------------------------------
print("\n$ fsipp classify quarter.json")
code = main(["classify", str(problem_path)])
print("exit code:", code)

# ---------------------------------------------------------------------------
# solve writes the report (and a per-order CSV next to it) when --out is
# given.  CERTIFIED and INCONCLUSIVE exit 0, INFEASIBLE 1, errors 2.
# ---------------------------------------------------------------------------
report_path = workdir / "report.json"
print("\n$ fsipp solve quarter.json --out report.json")
code = main(["solve", str(problem_path), "--out", str(report_path)])
report = json.loads(report_path.read_text())
print("exit code:", code)
print("verdict:", report["verdict"], " r_dual:", round(report["r_dual"], 6))
print("rows csv:", (workdir / "report.csv").read_text().splitlines()[0])

# ---------------------------------------------------------------------------
# certify re-runs the stop test at any point given on the command line.
# ---------------------------------------------------------------------------
point = ",".join(f"{c:.4f}" for c in report["candidate"])
print(f"\n$ fsipp certify quarter.json {point}")
code = main(["certify", str(problem_path), point])
print("exit code:", code)
