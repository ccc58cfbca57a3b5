import json

import pytest

from maxcon import Tolerance, generate_line2d, save_dataset_csv
from maxcon.cli import main
from maxcon.config import ConfigError, RunConfig, resolve_values
from maxcon.solver import timing_stripped


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    # stray MAXCON_* variables would leak into resolution
    import os

    for key in [k for k in os.environ if k.startswith("MAXCON_")]:
        monkeypatch.delenv(key)


@pytest.fixture()
def data_csv(tmp_path):
    path = tmp_path / "points.csv"
    save_dataset_csv(generate_line2d(15, 0.25, seed=0), path)
    return path


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestLayering:
    def test_flag_beats_file_beats_env(self, tmp_path):
        cfg_file = tmp_path / "run.json"
        cfg_file.write_text(json.dumps({"m": 300}))
        env = {"MAXCON_M": "500"}
        assert resolve_values({"m": 200}, env=env, file=cfg_file).m == 200
        assert resolve_values({}, env=env, file=cfg_file).m == 300
        assert resolve_values({}, env=env).m == 500
        assert resolve_values({}).m == 1000

    def test_cli_none_does_not_shadow(self, tmp_path):
        cfg_file = tmp_path / "run.json"
        cfg_file.write_text(json.dumps({"eps": 0.25}))
        rc = resolve_values({"eps": None, "m": 50}, file=cfg_file)
        assert rc.eps == 0.25
        assert rc.m == 50

    def test_missing_seed_draws_entropy_and_records_it(self):
        a = resolve_values({"seed": None})
        b = resolve_values({"seed": None})
        assert a.seed is not None and b.seed is not None
        assert 0 <= a.seed < 2**32
        # two draws colliding is a 1 in 2^32 event
        assert a.seed != b.seed

    def test_unknown_file_key_rejected(self, tmp_path):
        cfg_file = tmp_path / "run.json"
        cfg_file.write_text(json.dumps({"budget": 12}))
        with pytest.raises(ConfigError):
            resolve_values({}, file=cfg_file)

    def test_unknown_env_var_rejected(self):
        with pytest.raises(ConfigError):
            resolve_values({}, env={"MAXCON_EPSILON": "0.1"})

    def test_malformed_env_value_rejected(self):
        with pytest.raises(ConfigError):
            resolve_values({}, env={"MAXCON_M": "many"})

    def test_malformed_file_rejected(self, tmp_path):
        bad = tmp_path / "run.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            resolve_values({}, file=bad)

    def test_nl_variant_normalises_expand_off(self):
        rc = resolve_values({"variant": "nL"})
        assert rc.expand is False

    def test_explicit_expand_with_nl_conflicts(self):
        with pytest.raises(ConfigError):
            resolve_values({"variant": "nL", "expand": True})

    def test_round_trip_is_a_fixed_point(self):
        rc = resolve_values({"eps": 0.2, "m": 64, "variant": "nR", "seed": 9})
        again = resolve_values(rc.to_json_dict())
        assert again == rc

    def test_validation_matches_direct_construction(self):
        with pytest.raises(ConfigError):
            RunConfig(q=1.5)
        with pytest.raises(ConfigError):
            RunConfig(m=0)
        with pytest.raises(ConfigError):
            RunConfig(variant="speedy")


class TestFitCommand:
    def test_end_to_end_and_replay(self, tmp_path, data_csv, capsys):
        out = tmp_path / "fit.json"
        code, stdout, _ = run_cli(
            capsys, "fit", "--data", str(data_csv), "--eps", "0.1",
            "--m", "400", "--seed", "3", "--out", str(out),
        )
        assert code == 0
        assert "consensus" in stdout
        payload = json.loads(out.read_text())
        assert payload["consensus_size"] >= 11
        assert payload["run_config"]["seed"] == 3

        # replaying the recorded config reproduces everything but timing
        replay_cfg = tmp_path / "replay.json"
        replay_cfg.write_text(json.dumps(payload["run_config"]))
        out2 = tmp_path / "fit2.json"
        code, stdout2, _ = run_cli(
            capsys, "fit", "--config", str(replay_cfg), "--out", str(out2),
        )
        assert code == 0
        second = json.loads(out2.read_text())

        def replayable(doc):
            doc = timing_stripped(doc)
            doc["run_config"].pop("out")
            return doc

        assert replayable(second) == replayable(payload)
        assert stdout2.replace(str(out2), str(out)) == stdout

    def test_missing_required_keys_exit_2(self, capsys, data_csv):
        code, _, err = run_cli(capsys, "fit", "--data", str(data_csv))
        assert code == 2
        assert "error" in err

    def test_missing_data_file_exit_2(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "fit", "--data", str(tmp_path / "nope.csv"),
            "--eps", "0.1", "--out", str(tmp_path / "o.json"),
        )
        assert code == 2

    def test_unknown_flag_exit_2(self, capsys, data_csv):
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--data", str(data_csv), "--turbo"])
        assert exc.value.code == 2

    def test_bad_variant_exit_2(self, capsys, data_csv, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main([
                "fit", "--data", str(data_csv), "--eps", "0.1",
                "--variant", "warp", "--out", str(tmp_path / "o.json"),
            ])
        assert exc.value.code == 2


class TestInfluenceCommand:
    def test_sampled_json(self, tmp_path, data_csv, capsys):
        out = tmp_path / "inf.json"
        code, stdout, _ = run_cli(
            capsys, "influence", "--data", str(data_csv), "--eps", "0.1",
            "--m", "200", "--seed", "1", "--out", str(out),
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["run_config"]["mode"] == "sampled"
        assert payload["run_config"]["q"] == 0.5
        assert len(payload["values"]) == 15

    def test_exact_mode(self, tmp_path, data_csv, capsys):
        out = tmp_path / "inf.json"
        code, _, _ = run_cli(
            capsys, "influence", "--data", str(data_csv), "--eps", "0.1",
            "--exact", "--out", str(out),
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["run_config"]["mode"] == "exact"
        assert payload["m"] is None

    def test_exact_mode_guards_dimension(self, tmp_path, capsys):
        big = tmp_path / "big.csv"
        save_dataset_csv(generate_line2d(30, 0.2, seed=0), big)
        code, _, err = run_cli(
            capsys, "influence", "--data", str(big), "--eps", "0.1",
            "--exact", "--out", str(tmp_path / "o.json"),
        )
        assert code == 2

    def test_csv_output_with_config_sidecar(self, tmp_path, data_csv, capsys):
        out = tmp_path / "inf.csv"
        code, _, _ = run_cli(
            capsys, "influence", "--data", str(data_csv), "--eps", "0.1",
            "--m", "100", "--csv", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "index,value"
        assert len(lines) == 16
        sidecar = json.loads((tmp_path / "inf.csv.config.json").read_text())
        assert sidecar["mode"] == "sampled"
        assert sidecar["format"] == "csv"

    def test_sidecar_replays_without_flags(self, tmp_path, data_csv, capsys):
        out = tmp_path / "inf.csv"
        code, _, _ = run_cli(
            capsys, "influence", "--data", str(data_csv), "--eps", "0.1",
            "--m", "100", "--seed", "8", "--csv", "--out", str(out),
        )
        assert code == 0
        original = out.read_bytes()
        out.unlink()
        code, _, _ = run_cli(
            capsys, "influence", "--config", str(tmp_path / "inf.csv.config.json"),
        )
        assert code == 0
        assert out.read_bytes() == original


class TestExperimentAndReport:
    def test_full_pipeline(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({
            "kind": "separation", "n": 10, "seeds": 2,
            "m_values": [100], "q_values": [0.3],
        }))
        out_dir = tmp_path / "results"
        code, stdout, _ = run_cli(
            capsys, "experiment", "--spec", str(spec_path),
            "--out-dir", str(out_dir),
        )
        assert code == 0
        assert "2 rows" in stdout
        assert (out_dir / "separation.csv").exists()
        assert (out_dir / "separation.resolved.json").exists()

        code, report_text, _ = run_cli(
            capsys, "report", "--in", str(out_dir), "--out",
            str(out_dir / "report.csv"),
        )
        assert code == 0
        assert report_text.startswith("source,")
        assert (out_dir / "report.csv").read_text() == report_text

    def test_unknown_spec_key_exit_2(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({"kind": "separation", "turbo": 1}))
        code, _, err = run_cli(
            capsys, "experiment", "--spec", str(spec_path),
            "--out-dir", str(tmp_path / "r"),
        )
        assert code == 2

    def test_malformed_spec_exit_2(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text("[1, 2]")
        code, _, _ = run_cli(
            capsys, "experiment", "--spec", str(spec_path),
            "--out-dir", str(tmp_path / "r"),
        )
        assert code == 2

    def test_report_on_empty_directory_exit_2(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "report", "--in", str(tmp_path))
        assert code == 2


class TestTopLevel:
    def test_no_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "maxcon" in out
