"""Dev sanity checks for config resolution and the CLI (not the test suite)."""

import contextlib
import io
import json
import tempfile
from pathlib import Path

from maxcon import generate_line2d, save_dataset_csv, timing_stripped
from maxcon.cli import main
from maxcon.config import ConfigError, RunConfig, resolve_config, resolve_values

failures = []
checks = 0


def check(name, cond):
    global checks
    checks += 1
    if not cond:
        failures.append(name)
        print(f"FAIL  {name}")


def expect_config_error(name, fn):
    try:
        fn()
    except ConfigError:
        check(name, True)
    else:
        check(name, False)


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = main(argv)
        except SystemExit as exc:
            code = exc.code
    return code, out.getvalue(), err.getvalue()


# --- precedence -----------------------------------------------------------
rc = resolve_config(["--q", "0.2"], env={}, file={"q": 0.5, "eps": 0.1, "seed": 7})
check("flag beats file", rc.q == 0.2)
check("file fills gaps", rc.eps == 0.1 and rc.seed == 7)

rc = resolve_config([], env={"MAXCON_M": "500"}, file=None)
check("env m=500", rc.m == 500)
rc = resolve_config(["--m", "200"], env={"MAXCON_M": "500"}, file={"m": 300})
check("full precedence chain", rc.m == 200)
rc = resolve_config([], env={"MAXCON_M": "500"}, file={"m": 300})
check("file beats env", rc.m == 300)
rc = resolve_config([], env={"HOME": "/root", "MAXCON_VARIANT": "nR"}, file=None)
check("env variant + unrelated vars ignored", rc.variant == "nR")

# --- seed handling --------------------------------------------------------
a = resolve_config([], env={}, file=None)
b = resolve_config([], env={}, file=None)
check("entropy seed recorded", a.seed >= 0)
check("entropy seeds differ", a.seed != b.seed)
check("explicit seed kept", resolve_config(["--seed", "0"], env={}).seed == 0)

# --- rejection ------------------------------------------------------------
expect_config_error("unknown file key", lambda: resolve_values(
    {}, env={}, file={"epsilon": 0.1}))
expect_config_error("unknown env var", lambda: resolve_values(
    {}, env={"MAXCON_EPSILON": "0.1"}))
expect_config_error("bad env value", lambda: resolve_values(
    {}, env={"MAXCON_M": "many"}))
expect_config_error("q out of range", lambda: resolve_values({"q": 1.5}))
expect_config_error("expand true with nL", lambda: resolve_values(
    {"variant": "nL"}, file={"expand": True}))
check("nL without explicit expand is fine",
      resolve_values({"variant": "nL"}).expand is False)

with tempfile.TemporaryDirectory() as td:
    bad = Path(td) / "bad.json"
    bad.write_text("{not json")
    expect_config_error("malformed JSON file", lambda: resolve_config(
        ["--config", str(bad)], env={}))

# --- round-trip -----------------------------------------------------------
rc = resolve_config(["--eps", "0.1", "--variant", "nR", "--seed", "3", "-vv"], env={})
again = resolve_values({}, env={}, file=rc.to_json_dict())
check("round-trip equality", rc == again)
rc = resolve_values({"variant": "nL", "eps": 0.2, "seed": 1})
check("nL round-trip", rc == resolve_values({}, file=rc.to_json_dict()))

# --- CLI end to end -------------------------------------------------------
with tempfile.TemporaryDirectory() as td:
    td = Path(td)
    data = td / "points.csv"
    save_dataset_csv(generate_line2d(15, 0.25, seed=5), data)

    code, out, err = run_cli([
        "fit", "--data", str(data), "--eps", "0.1", "--m", "400",
        "--seed", "5", "--out", str(td / "fit.json"),
    ])
    check("fit exit 0", code == 0)
    check("fit summary on stdout", "consensus" in out)
    fit = json.loads((td / "fit.json").read_text())
    check("fit embeds run config", fit["run_config"]["seed"] == 5
          and fit["run_config"]["m"] == 400)
    check("fit has mask and trace", "mask" in fit and "trace" in fit)

    # replay from the recorded config: identical non-timing bytes
    (td / "replay.json").write_text(json.dumps(
        {k: v for k, v in fit["run_config"].items() if k != "out"}))
    code2, out2, _ = run_cli([
        "fit", "--config", str(td / "replay.json"), "--out", str(td / "fit2.json"),
    ])
    check("replay exit 0", code2 == 0)
    fit2 = json.loads((td / "fit2.json").read_text())
    check("replay stdout identical", out2 == out.replace("fit.json", "fit2.json"))
    strip = lambda d: timing_stripped({k: v for k, v in d.items() if k != "run_config"})
    check("replay result identical minus timing", strip(fit) == strip(fit2))
    check("replay config differs only in out",
          {**fit["run_config"], "out": None} == {**fit2["run_config"], "out": None})

    # influence: sampled JSON, exact JSON, CSV + sidecar
    code, out, err = run_cli([
        "influence", "--data", str(data), "--eps", "0.1", "--m", "300",
        "--seed", "2", "--out", str(td / "inf.json"),
    ])
    check("influence exit 0", code == 0)
    inf = json.loads((td / "inf.json").read_text())
    check("influence values present", len(inf["values"]) == 15)
    check("influence mode recorded", inf["run_config"]["mode"] == "sampled")

    code, _, _ = run_cli([
        "influence", "--data", str(data), "--eps", "0.1", "--exact",
        "--out", str(td / "inf_exact.json"),
    ])
    check("exact influence exit 0", code == 0)
    exact = json.loads((td / "inf_exact.json").read_text())
    check("exact mode recorded", exact["run_config"]["mode"] == "exact")

    code, _, _ = run_cli([
        "influence", "--data", str(data), "--eps", "0.1", "--csv",
        "--seed", "2", "--out", str(td / "inf.csv"),
    ])
    check("csv influence exit 0", code == 0)
    check("csv header", (td / "inf.csv").read_text().startswith("index,value"))
    check("csv config sidecar", json.loads(
        (td / "inf.csv.config.json").read_text())["seed"] == 2)

    # experiment + report
    spec = {"kind": "influence_error", "n": 10, "seeds": 2,
            "m_values": [50, 200], "q_values": [0.5]}
    (td / "spec.json").write_text(json.dumps(spec))
    code, out, _ = run_cli([
        "experiment", "--spec", str(td / "spec.json"), "--out-dir", str(td / "exp"),
    ])
    check("experiment exit 0", code == 0)
    check("experiment row count in stdout", out.startswith("4 rows"))
    code, out, _ = run_cli(["report", "--in", str(td / "exp")])
    check("report exit 0", code == 0)
    check("report csv on stdout", out.startswith("source,") and "mse_mean" in out)
    check("report file written", (td / "exp" / "report.csv").is_file())

    # error paths -> exit 2
    for name, argv in [
        ("missing required", ["fit", "--data", str(data), "--out", "x.json"]),
        ("missing data file", ["fit", "--data", str(td / "nope.csv"),
                               "--eps", "0.1", "--out", str(td / "x.json")]),
        ("unknown spec key", None),
        ("unknown flag", ["fit", "--bogus"]),
        ("no subcommand", []),
        ("bad variant", ["fit", "--variant", "huge"]),
    ]:
        if name == "unknown spec key":
            (td / "bad_spec.json").write_text(json.dumps({"kind": "ablation", "zap": 1}))
            argv = ["experiment", "--spec", str(td / "bad_spec.json"), "--out-dir", str(td)]
        code, _, err = run_cli(argv)
        check(f"exit 2: {name}", code == 2)

print(f"\n{checks} checks, {len(failures)} failures")
if failures:
    raise SystemExit(1)
print("ALL OK")
