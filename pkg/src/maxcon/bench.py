"""Desk-scale experiment drivers with persisted, plottable outputs.

Four studies: influence estimation error against exact enumeration,
inlier/outlier influence separation, an ablation over solver variants,
and a time-matched comparison against the RANSAC baselines.  Each run
emits a long-format CSV (one row per grid cell and seed) plus a
resolved copy of the experiment spec; re-running a fully resolved spec
reproduces the CSV bit-identically apart from wall-time columns.

Deficits are measured against the exhaustive optimum when the cube is
small enough to enumerate (n <= 20, certified) and against the labelled
inlier count otherwise (uncertified; a solver may legitimately beat it
when noise admits extra points, making the deficit negative).

The comparison study matches compute budgets by wall time: the greedy
solver runs first and the RANSAC iteration count is calibrated to its
runtime.  Calibrated counts land in the "iterations" column and in the
resolved spec, so a rerun of the resolved spec replays them instead of
re-measuring.
"""

from __future__ import annotations

import csv
import hashlib
import json
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .boolean import (
    EXHAUSTIVE_MAX_N,
    influence_exact,
    influence_mse,
    influence_sampled,
    max_upper_zero_exhaustive,
    separation,
    tabulate_mbf,
)
from .feasibility import FeasibilityOracle
from .masks import SubsetMask
from .model import Dataset, Tolerance, generate_line2d, generate_linear
from .solver import VARIANTS, MaxConConfig, lo_ransac, mbf_maxcon_variant, ransac

__all__ = [
    "KINDS",
    "ExperimentSpec",
    "config_hash",
    "version_string",
    "run_influence_error",
    "run_separation",
    "run_ablation",
    "run_comparison",
    "run_experiment",
    "report",
]

KINDS = ("influence_error", "separation", "ablation", "comparison")
FAMILIES = ("line2d", "linear")

CALIBRATION_ITERATIONS = 200
MAX_MATCHED_ITERATIONS = 500_000

FIELD_ORDER = {
    "influence_error": (
        "kind", "family", "n", "p", "epsilon", "m", "q", "seed",
        "mse", "version", "config_hash",
    ),
    "separation": (
        "kind", "family", "n", "p", "epsilon", "m", "q", "seed",
        "separation", "exact_separation", "version", "config_hash",
    ),
    "ablation": (
        "kind", "family", "n", "p", "epsilon", "n_outliers", "variant",
        "m", "q", "seed", "consensus", "reference", "ref_kind", "deficit",
        "certified", "oracle_calls", "wall_time_s", "version", "config_hash",
    ),
    "comparison": (
        "kind", "family", "n", "p", "epsilon", "n_outliers", "solver",
        "m", "q", "iterations", "seed", "consensus", "reference", "ref_kind",
        "deficit", "certified", "oracle_calls", "wall_time_s",
        "version", "config_hash",
    ),
}

# columns aggregated by report(); everything else (minus seed) is a group key
METRIC_COLUMNS = (
    "mse", "separation", "exact_separation", "consensus", "reference",
    "deficit", "oracle_calls", "wall_time_s", "iterations",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a study kind, a data family, and a parameter grid.

    seeds accepts an integer count (expands to range(count)) or an
    explicit list.  ransac_iterations is None for wall-time calibration,
    an integer to pin every cell, or a mapping "n_outliers:seed" ->
    count as written by a resolved spec.
    """

    kind: str
    family: str = "line2d"
    n: int = 15
    p: int = 2
    epsilon: float = 0.1
    outlier_fraction: float = 0.25
    inlier_noise: float = 0.1
    outlier_range: tuple[float, float] = (0.1, 5.0)
    seeds: tuple[int, ...] = 10
    m_values: tuple[int, ...] = (1000,)
    q_values: tuple[float, ...] = (0.5,)
    outlier_counts: tuple[int, ...] = (5, 10, 15, 20, 25, 30, 35, 40)
    variants: tuple[str, ...] = VARIANTS
    solver_m: int = 500
    solver_q: float | None = None
    ransac_iterations: int | dict | None = None
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "solver_m", int(self.solver_m))
        object.__setattr__(self, "workers", int(self.workers))
        if self.family == "line2d" and self.p != 2:
            raise ValueError("line2d datasets have p = 2 (slope and intercept)")
        if self.n < 2 or self.p < 1 or self.n <= self.p:
            raise ValueError(f"need n > p >= 1, got n={self.n} p={self.p}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        seeds = self.seeds
        if isinstance(seeds, (int, np.integer)):
            seeds = tuple(range(int(seeds)))
        else:
            seeds = tuple(int(s) for s in seeds)
        if not seeds or any(s < 0 for s in seeds):
            raise ValueError("seeds must be a positive count or nonnegative integers")
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        object.__setattr__(self, "q_values", tuple(float(q) for q in self.q_values))
        object.__setattr__(
            self, "outlier_counts", tuple(int(c) for c in self.outlier_counts)
        )
        object.__setattr__(self, "variants", tuple(str(v) for v in self.variants))
        rng = tuple(float(v) for v in self.outlier_range)
        if len(rng) != 2 or not 0 <= rng[0] < rng[1]:
            raise ValueError(f"outlier_range must be (inner, outer), got {self.outlier_range}")
        object.__setattr__(self, "outlier_range", rng)
        if self.solver_q is not None:
            object.__setattr__(self, "solver_q", float(self.solver_q))
            if not 0.0 < self.solver_q < 1.0:
                raise ValueError(f"solver_q must be in (0, 1), got {self.solver_q}")
        if self.kind in ("influence_error", "separation"):
            if any(m < 1 for m in self.m_values) or not self.m_values:
                raise ValueError("m_values must be nonempty with every m >= 1")
            if any(not 0.0 < q < 1.0 for q in self.q_values) or not self.q_values:
                raise ValueError("q_values must be nonempty with every q in (0, 1)")
            if self.n > EXHAUSTIVE_MAX_N:
                raise ValueError(
                    f"exact influences need n <= {EXHAUSTIVE_MAX_N}, got {self.n}"
                )
            if not 0.0 <= self.outlier_fraction < 1.0:
                raise ValueError(f"outlier_fraction in [0, 1), got {self.outlier_fraction}")
        if self.kind in ("ablation", "comparison"):
            if not self.outlier_counts or any(
                not 0 <= c < self.n for c in self.outlier_counts
            ):
                raise ValueError("outlier_counts must be nonempty, each in [0, n)")
            if self.solver_m < 1:
                raise ValueError(f"solver_m must be >= 1, got {self.solver_m}")
        if self.kind == "ablation":
            if not self.variants or any(v not in VARIANTS for v in self.variants):
                raise ValueError(f"variants must be a nonempty subset of {VARIANTS}")
        if self.ransac_iterations is not None and not isinstance(
            self.ransac_iterations, dict
        ):
            it = int(self.ransac_iterations)
            if it < 1:
                raise ValueError(f"ransac_iterations must be >= 1, got {it}")
            object.__setattr__(self, "ransac_iterations", it)
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def to_json_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown experiment spec keys: {', '.join(unknown)}")
        if "kind" not in data:
            raise ValueError("experiment spec needs a 'kind'")
        return cls(**data)


def config_hash(spec: ExperimentSpec) -> str:
    """12-hex digest of the resolved spec, excluding execution-only fields."""
    payload = spec.to_json_dict()
    payload.pop("workers", None)
    payload.pop("output_path", None)
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


_VERSION: str | None = None


def version_string() -> str:
    """Package version, with the git commit when a checkout is available."""
    global _VERSION
    if _VERSION is None:
        version = __version__
        try:
            described = subprocess.run(
                ["git", "describe", "--always", "--dirty"],
                cwd=Path(__file__).resolve().parent,
                capture_output=True,
                text=True,
                timeout=5,
            )
            if described.returncode == 0 and described.stdout.strip():
                version = f"{__version__}+g{described.stdout.strip()}"
        except (OSError, subprocess.TimeoutExpired):
            pass
        _VERSION = version
    return _VERSION


# ---------------------------------------------------------------------------
# Shared plumbing


def _make_dataset(spec: ExperimentSpec, seed: int, n_outliers: int | None = None) -> Dataset:
    if spec.family == "line2d":
        frac = (
            spec.outlier_fraction if n_outliers is None else n_outliers / spec.n
        )
        return generate_line2d(spec.n, frac, spec.inlier_noise, spec.outlier_range, seed)
    count = n_outliers if n_outliers is not None else int(round(spec.outlier_fraction * spec.n))
    return generate_linear(spec.n, spec.p, count, spec.inlier_noise, spec.outlier_range, seed)


def _reference(spec: ExperimentSpec, dataset: Dataset) -> tuple[int, str]:
    """Deficit reference: exhaustive optimum if enumerable, labels otherwise."""
    if dataset.n <= EXHAUSTIVE_MAX_N:
        oracle = FeasibilityOracle(dataset, Tolerance(spec.epsilon))
        return max_upper_zero_exhaustive(oracle).popcount, "exhaustive"
    return len(dataset.inlier_indices()), "labels"


def _common_columns(spec: ExperimentSpec) -> dict:
    return {
        "kind": spec.kind,
        "family": spec.family,
        "n": spec.n,
        "p": spec.p,
        "epsilon": spec.epsilon,
        "version": version_string(),
        "config_hash": config_hash(spec),
    }


def _run_jobs(jobs, fn, workers: int) -> list[dict]:
    # ThreadPoolExecutor.map preserves submission order, so rows land in
    # the deterministic grid order no matter which worker finishes first
    if workers <= 1:
        nested = [fn(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(fn, jobs))
    return [row for rows in nested for row in rows]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, fieldnames, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_cell(row.get(k)) for k in fieldnames})


# ---------------------------------------------------------------------------
# Influence studies


def _influence_jobs(spec: ExperimentSpec, want_mse: bool) -> list[dict]:
    common = _common_columns(spec)

    def run(seed: int) -> list[dict]:
        dataset = _make_dataset(spec, seed)
        oracle = FeasibilityOracle(dataset, Tolerance(spec.epsilon))
        table = tabulate_mbf(oracle)
        exact = influence_exact(table)
        exact_sep = separation(exact, dataset.labels)
        scope = SubsetMask.all_ones(dataset.n)
        rows = []
        for m in spec.m_values:
            for q in spec.q_values:
                est = influence_sampled(table, scope, m=m, q=q, seed=seed)
                row = dict(common, m=m, q=q, seed=seed)
                if want_mse:
                    row["mse"] = influence_mse(est, exact)
                else:
                    row["separation"] = separation(est, dataset.labels)
                    row["exact_separation"] = exact_sep
                rows.append(row)
        return rows

    return _run_jobs(list(spec.seeds), run, spec.workers)


def run_influence_error(spec: ExperimentSpec) -> list[dict]:
    """Estimation error of sampled influences against exact enumeration."""
    if spec.kind != "influence_error":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'influence_error'")
    return _influence_jobs(spec, want_mse=True)


def run_separation(spec: ExperimentSpec) -> list[dict]:
    """Inlier/outlier influence separation per grid cell and seed."""
    if spec.kind != "separation":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'separation'")
    return _influence_jobs(spec, want_mse=False)


# ---------------------------------------------------------------------------
# Solver studies


def run_ablation(spec: ExperimentSpec) -> list[dict]:
    """Variant sweep: consensus deficit and oracle cost per grid cell."""
    if spec.kind != "ablation":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'ablation'")
    common = _common_columns(spec)
    cells = [(c, s) for c in spec.outlier_counts for s in spec.seeds]

    def run(cell) -> list[dict]:
        n_out, seed = cell
        dataset = _make_dataset(spec, seed, n_outliers=n_out)
        ref, ref_kind = _reference(spec, dataset)
        rows = []
        for variant in spec.variants:
            cfg = MaxConConfig(
                epsilon=spec.epsilon,
                m=spec.solver_m,
                q=spec.solver_q,
                seed=seed,
                variant=variant,
            )
            result = mbf_maxcon_variant(dataset, cfg)
            rows.append(
                dict(
                    common,
                    n_outliers=n_out,
                    variant=variant,
                    m=spec.solver_m,
                    q=result.config["q"],
                    seed=seed,
                    consensus=result.consensus_size,
                    reference=ref,
                    ref_kind=ref_kind,
                    deficit=ref - result.consensus_size,
                    certified=result.certified_upper_zero,
                    oracle_calls=result.oracle_calls,
                    wall_time_s=result.wall_time_s,
                )
            )
        return rows

    return _run_jobs(cells, run, spec.workers)


def _matched_iterations(spec: ExperimentSpec, dataset, mbf_time: float, n_out, seed) -> int:
    pinned = spec.ransac_iterations
    if isinstance(pinned, dict):
        key = f"{n_out}:{seed}"
        if key not in pinned:
            raise ValueError(f"resolved spec has no ransac_iterations entry for {key}")
        return int(pinned[key])
    if pinned is not None:
        return int(pinned)
    tol = Tolerance(spec.epsilon)
    burst = ransac(dataset, tol, CALIBRATION_ITERATIONS, seed=seed)
    per_iteration = max(burst.wall_time_s / CALIBRATION_ITERATIONS, 1e-9)
    return int(np.clip(round(mbf_time / per_iteration), 1, MAX_MATCHED_ITERATIONS))


def run_comparison(spec: ExperimentSpec) -> list[dict]:
    """Greedy solver vs RANSAC baselines under a matched time budget.

    Every baseline row carries the realized iteration count, which is
    what a resolved spec pins for bit-identical reruns.  Rows are
    stamped with the hash of the fully resolved spec, so a rerun from
    the resolved file reproduces the hash column too.
    """
    if spec.kind != "comparison":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'comparison'")
    common = _common_columns(spec)
    tol = Tolerance(spec.epsilon)
    cells = [(c, s) for c in spec.outlier_counts for s in spec.seeds]

    def run(cell) -> list[dict]:
        n_out, seed = cell
        dataset = _make_dataset(spec, seed, n_outliers=n_out)
        ref, ref_kind = _reference(spec, dataset)
        cfg = MaxConConfig(
            epsilon=spec.epsilon, m=spec.solver_m, q=spec.solver_q, seed=seed
        )
        r_mbf = mbf_maxcon_variant(dataset, cfg)
        iterations = _matched_iterations(spec, dataset, r_mbf.wall_time_s, n_out, seed)
        r_plain = ransac(dataset, tol, iterations, seed=seed)
        r_lo = lo_ransac(dataset, tol, iterations, seed=seed)
        rows = []
        for solver, result, m, q, iters in (
            ("mbf", r_mbf, spec.solver_m, r_mbf.config["q"], None),
            ("ransac", r_plain, None, None, iterations),
            ("lo_ransac", r_lo, None, None, iterations),
        ):
            rows.append(
                dict(
                    common,
                    n_outliers=n_out,
                    solver=solver,
                    m=m,
                    q=q,
                    iterations=iters,
                    seed=seed,
                    consensus=result.consensus_size,
                    reference=ref,
                    ref_kind=ref_kind,
                    deficit=ref - result.consensus_size,
                    certified=result.certified_upper_zero,
                    oracle_calls=result.oracle_calls,
                    wall_time_s=result.wall_time_s,
                )
            )
        return rows

    rows = _run_jobs(cells, run, spec.workers)
    resolved_hash = config_hash(replace(spec, ransac_iterations=_realized_map(rows)))
    for row in rows:
        row["config_hash"] = resolved_hash
    return rows


def _realized_map(rows) -> dict:
    return {
        f"{row['n_outliers']}:{row['seed']}": int(row["iterations"])
        for row in rows
        if row["solver"] == "ransac"
    }


# ---------------------------------------------------------------------------
# Entry points


_RUNNERS = {
    "influence_error": run_influence_error,
    "separation": run_separation,
    "ablation": run_ablation,
    "comparison": run_comparison,
}


def run_experiment(spec: ExperimentSpec, out_dir) -> dict:
    """Run one spec, write its CSV and resolved spec, return the paths.

    The resolved spec pins everything a rerun needs: expanded seeds and,
    for comparisons, the realized per-cell RANSAC iteration counts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _RUNNERS[spec.kind](spec)
    name = spec.output_path or f"{spec.kind}.csv"
    csv_path = out_dir / name
    _write_csv(csv_path, FIELD_ORDER[spec.kind], rows)

    resolved = spec.to_json_dict()
    if spec.kind == "comparison":
        resolved["ransac_iterations"] = _realized_map(rows)
    resolved_path = csv_path.with_suffix("").with_suffix(".resolved.json")
    resolved_path.write_text(
        json.dumps(resolved, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return {"csv": str(csv_path), "resolved_spec": str(resolved_path), "rows": len(rows)}


def _aggregate_file(path: Path) -> list[dict]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        columns = list(reader.fieldnames)
        rows = list(reader)
    metrics = [c for c in columns if c in METRIC_COLUMNS]
    keys = [c for c in columns if c not in metrics and c != "seed"]
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for key, members in groups.items():
        agg = {"source": path.name, **dict(zip(keys, key)), "count": len(members)}
        for metric in metrics:
            values = np.array(
                [float(r[metric]) for r in members if r[metric] not in ("", None)]
            )
            if values.size == 0:
                continue
            agg[f"{metric}_mean"] = float(values.mean())
            agg[f"{metric}_p05"] = float(np.percentile(values, 5))
            agg[f"{metric}_p95"] = float(np.percentile(values, 95))
        out.append(agg)
    return out


def report(in_dir, out_path=None) -> Path:
    """Aggregate every result CSV in a directory: mean and 5/95 percentiles
    over seeds for each grid cell.  Writes report.csv next to the inputs
    unless out_path says otherwise, and returns the path written."""
    in_dir = Path(in_dir)
    files = sorted(
        f for f in in_dir.glob("*.csv") if f.name != "report.csv"
    )
    if not files:
        raise ValueError(f"no result CSVs found in {in_dir}")
    rows = []
    for f in files:
        rows.extend(_aggregate_file(f))
    fieldnames: list[str] = []
    for row in rows:
        for k in row:
            if k not in fieldnames:
                fieldnames.append(k)
    out = Path(out_path) if out_path is not None else in_dir / "report.csv"
    _write_csv(out, fieldnames, rows)
    return out
