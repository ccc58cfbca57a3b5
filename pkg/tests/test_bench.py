import csv
import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from maxcon import ExperimentSpec, report, run_experiment
from maxcon.bench import (
    config_hash,
    run_ablation,
    run_comparison,
    run_influence_error,
    run_separation,
    version_string,
)


def rows_without_timing(rows):
    return [{k: v for k, v in row.items() if k != "wall_time_s"} for row in rows]


class TestExperimentSpec:
    def test_seed_count_expands_to_a_range(self):
        spec = ExperimentSpec(kind="separation", n=10, seeds=4)
        assert spec.seeds == (0, 1, 2, 3)

    def test_explicit_seed_list_kept(self):
        spec = ExperimentSpec(kind="separation", n=10, seeds=(3, 9))
        assert spec.seeds == (3, 9)

    def test_json_round_trip(self):
        spec = ExperimentSpec(
            kind="comparison",
            n=30,
            outlier_counts=(2, 5),
            seeds=2,
            ransac_iterations={"2:0": 17},
        )
        back = ExperimentSpec.from_json_dict(json.loads(json.dumps(spec.to_json_dict())))
        assert back == spec

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            ExperimentSpec.from_json_dict({"kind": "separation", "cheese": 1})

    def test_kind_required(self):
        with pytest.raises(ValueError):
            ExperimentSpec.from_json_dict({"n": 10})

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(kind="ablation", n=10, outlier_counts=(10,)),
            dict(kind="influence_error", n=25),
            dict(kind="separation", n=10, q_values=(0.0,)),
            dict(kind="influence_error", n=10, m_values=(0,)),
            dict(kind="nonsense", n=10),
            dict(kind="ablation", n=10, variants=("full", "warp")),
            dict(kind="separation", n=10, family="cubic"),
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentSpec(**kwargs)

    def test_hash_ignores_workers_and_output(self):
        spec = ExperimentSpec(kind="separation", n=10, seeds=2)
        assert config_hash(spec) == config_hash(replace(spec, workers=4))
        assert config_hash(spec) == config_hash(replace(spec, output_path="x.csv"))
        assert config_hash(spec) != config_hash(replace(spec, n=11))
        assert len(config_hash(spec)) == 12

    def test_version_string_shape(self):
        text = version_string()
        assert "+g" in text


@pytest.fixture(scope="module")
def influence_rows():
    spec = ExperimentSpec(
        kind="influence_error", n=10, seeds=3, m_values=(100, 1000), q_values=(0.5,)
    )
    return spec, run_influence_error(spec)


class TestInfluenceErrorRuns:

    def test_grid_is_complete(self, influence_rows):
        spec, rows = influence_rows
        assert len(rows) == len(spec.seeds) * len(spec.m_values) * len(spec.q_values)

    def test_mse_shrinks_with_more_samples(self, influence_rows):
        _, rows = influence_rows
        by_m = {}
        for row in rows:
            by_m.setdefault(row["m"], []).append(row["mse"])
        assert np.mean(by_m[1000]) < np.mean(by_m[100])

    def test_rows_carry_the_hash(self, influence_rows):
        spec, rows = influence_rows
        assert {row["config_hash"] for row in rows} == {config_hash(spec)}


class TestSeparationRuns:
    def test_margin_grows_with_samples(self):
        spec = ExperimentSpec(
            kind="separation", n=12, seeds=4, m_values=(100, 2000), q_values=(0.25,)
        )
        rows = run_separation(spec)
        by_m = {}
        for row in rows:
            by_m.setdefault(row["m"], []).append(row["separation"])
        assert np.mean(by_m[2000]) > np.mean(by_m[100])

    def test_in_band_bias_beats_heavy_bias(self):
        spec = ExperimentSpec(
            kind="separation", n=12, seeds=4, m_values=(1500,), q_values=(0.25, 0.8)
        )
        rows = run_separation(spec)
        by_q = {}
        for row in rows:
            by_q.setdefault(row["q"], []).append(row["separation"])
        assert np.mean(by_q[0.25]) > np.mean(by_q[0.8])


@pytest.fixture(scope="module")
def ablation_rows():
    spec = ExperimentSpec(
        kind="ablation", n=12, seeds=2, outlier_counts=(0, 3), solver_m=300
    )
    return run_ablation(spec)


class TestAblationRuns:

    def test_deficit_nonnegative_against_exhaustive(self, ablation_rows):
        assert all(row["ref_kind"] == "exhaustive" for row in ablation_rows)
        assert all(row["deficit"] >= 0 for row in ablation_rows)

    def test_clean_data_has_no_deficit(self, ablation_rows):
        for row in ablation_rows:
            if row["n_outliers"] == 0:
                assert row["deficit"] == 0

    def test_variant_column_covers_request(self, ablation_rows):
        assert {row["variant"] for row in ablation_rows} == {"full", "nR", "nB", "nL"}


@pytest.fixture(scope="module")
def comparison_setup():
    spec = ExperimentSpec(
        kind="comparison", n=25, seeds=2, outlier_counts=(6,), solver_m=200
    )
    return spec, run_comparison(spec)


class TestComparisonRuns:

    def test_solvers_present(self, comparison_setup):
        _, rows = comparison_setup
        assert {row["solver"] for row in rows} == {"mbf", "ransac", "lo_ransac"}

    def test_reference_is_label_count(self, comparison_setup):
        _, rows = comparison_setup
        for row in rows:
            assert row["ref_kind"] == "labels"
            assert row["reference"] == 25 - 6

    def test_realized_iterations_are_pinned_and_replayable(self, comparison_setup):
        spec, rows = comparison_setup
        realized = {
            f"{row['n_outliers']}:{row['seed']}": row["iterations"]
            for row in rows
            if row["solver"] == "ransac"
        }
        assert all(v >= 1 for v in realized.values())
        again = run_comparison(replace(spec, ransac_iterations=realized))
        assert rows_without_timing(again) == rows_without_timing(rows)

    def test_fixed_iteration_count_skips_calibration(self):
        spec = ExperimentSpec(
            kind="comparison", n=20, seeds=1, outlier_counts=(4,),
            solver_m=150, ransac_iterations=80,
        )
        rows = run_comparison(spec)
        for row in rows:
            if row["solver"] in ("ransac", "lo_ransac"):
                assert row["iterations"] == 80


def significant_rows(path) -> list[dict]:
    with Path(path).open() as fh:
        return rows_without_timing(list(csv.DictReader(fh)))


@pytest.fixture(scope="module")
def experiment_out(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("bench")
    spec = ExperimentSpec(
        kind="influence_error", n=9, seeds=2, m_values=(200,), q_values=(0.5,)
    )
    return spec, run_experiment(spec, out_dir), out_dir


class TestRunExperiment:

    def test_writes_csv_and_resolved_spec(self, experiment_out):
        _, result, _ = experiment_out
        assert Path(result["csv"]).exists()
        assert Path(result["resolved_spec"]).exists()
        assert result["rows"] == 2

    def test_resolved_spec_reruns_identically(self, experiment_out):
        _, result, out_dir = experiment_out
        resolved = json.loads(Path(result["resolved_spec"]).read_text())
        spec = ExperimentSpec.from_json_dict(resolved)
        replay = run_experiment(
            replace(spec, output_path="replay.csv"), out_dir
        )
        assert significant_rows(replay["csv"]) == significant_rows(result["csv"])

    def test_worker_count_never_changes_rows(self, experiment_out):
        spec, result, out_dir = experiment_out
        parallel = run_experiment(
            replace(spec, workers=4, output_path="par.csv"), out_dir
        )
        assert significant_rows(parallel["csv"]) == significant_rows(result["csv"])


class TestReport:
    def test_aggregates_each_csv(self, tmp_path):
        spec = ExperimentSpec(
            kind="separation", n=10, seeds=3, m_values=(150,), q_values=(0.3,),
            output_path="sep.csv",
        )
        run_experiment(spec, tmp_path)
        out = report(tmp_path)
        assert out == tmp_path / "report.csv"
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert rows
        for row in rows:
            assert row["source"] == "sep.csv"
            assert int(row["count"]) == 3
            lo, mid, hi = (
                float(row["separation_p05"]),
                float(row["separation_mean"]),
                float(row["separation_p95"]),
            )
            assert lo <= mid <= hi

    def test_rerun_is_idempotent(self, tmp_path):
        spec = ExperimentSpec(
            kind="influence_error", n=8, seeds=2, m_values=(100,), q_values=(0.5,)
        )
        run_experiment(spec, tmp_path)
        first = report(tmp_path).read_text()
        second = report(tmp_path).read_text()
        assert first == second

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            report(tmp_path)
