"""Command-line tools: fit a dataset, estimate influences, run
experiments, aggregate results.

Every artifact embeds the resolved configuration (including an
auto-drawn seed when none was given), so a run can be replayed from
its own output.  Exit code 0 on success, 2 on argument or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bench import ExperimentSpec, run_experiment
from .bench import report as bench_report
from .boolean import EXACT_MAX_N, influence_exact, influence_sampled, tabulate_mbf
from .config import ConfigError, cli_values, resolve_values, shared_options
from .feasibility import FeasibilityOracle
from .masks import SubsetMask
from .model import Tolerance, load_dataset_csv
from .solver import MaxConConfig, mbf_maxcon_variant

__all__ = ["main"]

logger = logging.getLogger("maxcon")


def _setup_logging(verbose: int) -> None:
    level = logging.WARNING - 10 * min(int(verbose), 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logger.setLevel(level)


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _split_hints(config_path, keys: tuple[str, ...]):
    """Load a config file and pull out command-level keys the generic
    layer does not know, so a recorded config replays as-is."""
    if config_path is None:
        return None, {}
    try:
        raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in config file {config_path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {config_path} must hold a JSON object")
    hints = {k: raw.pop(k) for k in keys if k in raw}
    return raw, hints


def _cmd_fit(ns: argparse.Namespace) -> int:
    rc = resolve_values(cli_values(ns), env=os.environ, file=ns.config)
    _setup_logging(rc.verbose)
    rc.require("data", "eps", "out")
    dataset = load_dataset_csv(rc.data)
    logger.info("loaded %d points with %d features from %s", dataset.n, dataset.p, rc.data)
    cfg = MaxConConfig(
        epsilon=rc.eps,
        m=rc.m,
        q=rc.q,
        seed=rc.seed,
        variant=rc.variant,
        local_expansion=rc.expand,
    )
    result = mbf_maxcon_variant(dataset, cfg)
    payload = result.to_json_dict()
    payload["run_config"] = rc.to_json_dict()
    _write_json(rc.out, payload)
    certified = "certified" if result.certified_upper_zero else "uncertified"
    print(
        f"consensus {result.consensus_size}/{dataset.n} ({certified}, "
        f"{result.oracle_calls} oracle calls) -> {rc.out}"
    )
    return 0


def _cmd_influence(ns: argparse.Namespace) -> int:
    file_layer, hints = _split_hints(ns.config, ("mode", "format"))
    rc = resolve_values(cli_values(ns), env=os.environ, file=file_layer)
    _setup_logging(rc.verbose)
    rc.require("data", "eps", "out")
    exact = ns.exact or hints.get("mode") == "exact"
    as_csv = ns.csv or hints.get("format") == "csv"
    dataset = load_dataset_csv(rc.data)
    oracle = FeasibilityOracle(dataset, Tolerance(rc.eps))
    if exact:
        if dataset.n > EXACT_MAX_N:
            raise ConfigError(
                f"--exact enumerates all 2^n subsets and needs n <= {EXACT_MAX_N}, "
                f"got n={dataset.n}"
            )
        vector = influence_exact(tabulate_mbf(oracle))
        mode = "exact"
    else:
        q = rc.q if rc.q is not None else 0.5
        vector = influence_sampled(
            oracle, SubsetMask.all_ones(dataset.n), m=rc.m, q=q, seed=rc.seed
        )
        mode = "sampled"
    run_config = dict(rc.to_json_dict(), mode=mode, format="csv" if as_csv else "json")
    if mode == "sampled":
        # record the q the estimator actually ran with
        run_config["q"] = q
    if as_csv:
        vector.to_csv(rc.out)
        # CSV cannot embed the config; keep the replay recipe alongside
        _write_json(f"{rc.out}.config.json", run_config)
    else:
        payload = vector.to_json_dict()
        payload["run_config"] = run_config
        _write_json(rc.out, payload)
    print(f"{mode} influences for {dataset.n} points -> {rc.out}")
    return 0


def _cmd_experiment(ns: argparse.Namespace) -> int:
    _setup_logging(ns.verbose)
    try:
        raw = json.loads(Path(ns.spec).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in experiment spec {ns.spec}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"experiment spec {ns.spec} must hold a JSON object")
    spec = ExperimentSpec.from_json_dict(raw)
    logger.info("running %s experiment into %s", spec.kind, ns.out_dir)
    info = run_experiment(spec, ns.out_dir)
    print(
        f"{info['rows']} rows -> {info['csv']} "
        f"(resolved spec: {info['resolved_spec']})"
    )
    return 0


def _cmd_report(ns: argparse.Namespace) -> int:
    _setup_logging(ns.verbose)
    path = bench_report(ns.in_dir, ns.out)
    logger.info("aggregate written to %s", path)
    sys.stdout.write(path.read_text(encoding="utf-8"))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="maxcon",
        description="Maximum-consensus robust fitting via Boolean influence estimation.",
    )
    top.add_argument("--version", action="version", version=f"maxcon {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser(
        "fit", parents=[shared_options()],
        help="solve one dataset and write the result JSON",
    )
    p_fit.set_defaults(handler=_cmd_fit)

    p_inf = sub.add_parser(
        "influence", parents=[shared_options()],
        help="estimate per-point influences",
    )
    p_inf.add_argument(
        "--exact", action="store_true",
        help=f"exact influences by full enumeration (n <= {EXACT_MAX_N})",
    )
    p_inf.add_argument("--csv", action="store_true", help="write CSV instead of JSON")
    p_inf.set_defaults(handler=_cmd_influence)

    p_exp = sub.add_parser("experiment", help="run an experiment spec")
    p_exp.add_argument("--spec", required=True, help="experiment spec JSON file")
    p_exp.add_argument("--out-dir", required=True, help="directory for result files")
    p_exp.add_argument("-v", "--verbose", action="count", default=0)
    p_exp.set_defaults(handler=_cmd_experiment)

    p_rep = sub.add_parser("report", help="aggregate result CSVs in a directory")
    p_rep.add_argument("--in", dest="in_dir", required=True, help="directory of result CSVs")
    p_rep.add_argument("--out", default=None, help="aggregate CSV path (default: <in>/report.csv)")
    p_rep.add_argument("-v", "--verbose", action="count", default=0)
    p_rep.set_defaults(handler=_cmd_report)
    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
