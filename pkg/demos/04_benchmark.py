"""A miniature benchmark run: spec in, tidy CSV out, aggregate report.

The bench module runs parameter grids over seeded datasets and writes
long-format CSVs meant for external plotting.  A resolved copy of the
spec lands next to each CSV; re-running it reproduces every number
except wall times.  This demo keeps the grids small so it finishes in
seconds; scale the spec fields up for real figures.
"""

import csv
import json
from pathlib import Path
from tempfile import mkdtemp

from maxcon import ExperimentSpec, run_experiment, report

out_dir = Path(mkdtemp(prefix="maxcon_demo_"))
print(f"writing results under {out_dir}")
print()

influence_spec = ExperimentSpec(
    kind="influence_error",
    n=12,
    seeds=5,
    m_values=(100, 400, 1600),
    q_values=(0.3, 0.5, 0.7),
)
info = run_experiment(influence_spec, out_dir)
print(f"influence_error: {info['rows']} rows -> {info['csv']}")

ablation_spec = ExperimentSpec(
    kind="ablation",
    n=12,
    seeds=(0, 1, 2),
    outlier_counts=(2, 4),
    solver_m=300,
)
info = run_experiment(ablation_spec, out_dir)
print(f"ablation:        {info['rows']} rows -> {info['csv']}")

comparison_spec = ExperimentSpec(
    kind="comparison",
    n=12,
    seeds=(0, 1, 2),
    outlier_counts=(2, 4),
    solver_m=300,
)
info = run_experiment(comparison_spec, out_dir)
print(f"comparison:      {info['rows']} rows -> {info['csv']}")
resolved = json.loads(Path(info["resolved_spec"]).read_text())
print(f"  time-matched RANSAC iterations per cell: {resolved['ransac_iterations']}")
print()

report_path = report(out_dir)
print(f"aggregate -> {report_path}")
print()

# a few aggregate lines: mean deficit by solver from the comparison rows
with report_path.open() as fh:
    rows = [r for r in csv.DictReader(fh) if r["source"] == "comparison.csv"]
by_solver: dict[str, list[float]] = {}
for row in rows:
    by_solver.setdefault(row["solver"], []).append(float(row["deficit_mean"]))
print("mean consensus deficit vs exhaustive optimum, by solver:")
for solver, values in sorted(by_solver.items()):
    print(f"  {solver:10s} {sum(values) / len(values):.3f}")
