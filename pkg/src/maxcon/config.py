"""Layered run configuration for the command-line tools.

Values merge from three layers with fixed precedence: command-line
flags override a JSON config file (--config), which overrides
MAXCON_-prefixed environment variables, which override built-in
defaults.  Unknown file keys and unknown MAXCON_ variables are
rejected rather than ignored, so typos fail loudly.

The seed is always resolved to a concrete integer; when no layer
provides one it is drawn from OS entropy.  Every output artifact
embeds the resolved config, so any published number can be replayed.
"""

from __future__ import annotations

import argparse
import json
import secrets
from dataclasses import dataclass, fields
from pathlib import Path

from .solver import VARIANTS

__all__ = ["ConfigError", "RunConfig", "resolve_config", "resolve_values", "shared_options"]


class ConfigError(ValueError):
    """Bad configuration input; the CLI reports it and exits with code 2."""


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(value, key: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ConfigError(f"{key} must be a boolean, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings shared by the fit and influence subcommands.

    data/eps/out stay None when no layer supplies them; the subcommand
    decides which of them it requires.  seed is always concrete.
    """

    data: str | None = None
    eps: float | None = None
    m: int = 1000
    q: float | None = None
    seed: int = 0
    variant: str = "full"
    expand: bool = True
    out: str | None = None
    verbose: int = 0

    def __post_init__(self) -> None:
        if self.data is not None:
            object.__setattr__(self, "data", str(self.data))
        if self.eps is not None:
            object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "m", int(self.m))
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.q is not None:
            object.__setattr__(self, "q", float(self.q))
            if not 0.0 < self.q < 1.0:
                raise ConfigError(f"q must be in (0, 1), got {self.q}")
        object.__setattr__(self, "seed", int(self.seed))
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        object.__setattr__(self, "expand", _parse_bool(self.expand, "expand"))
        if self.out is not None:
            object.__setattr__(self, "out", str(self.out))
        object.__setattr__(self, "verbose", int(self.verbose))
        if self.verbose < 0:
            raise ConfigError(f"verbose must be >= 0, got {self.verbose}")

    def to_json_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise ConfigError(
                "missing required settings: " + ", ".join(f"--{k}" for k in missing)
            )


_CONFIG_KEYS = tuple(f.name for f in fields(RunConfig))
_ENV_PREFIX = "MAXCON_"

# coercion applied to file and environment values; CLI values are
# already typed by argparse
_COERCE = {
    "data": str,
    "eps": float,
    "m": int,
    "q": float,
    "seed": int,
    "variant": str,
    "expand": lambda v: _parse_bool(v, "expand"),
    "out": str,
    "verbose": int,
}


def _file_layer(file) -> dict:
    if file is None:
        return {}
    if isinstance(file, dict):
        raw = dict(file)
        origin = "config"
    else:
        path = Path(file)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in config file {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        origin = str(path)
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys in {origin}: {', '.join(unknown)}")
    return {k: v for k, v in raw.items() if v is not None}


def _env_layer(env) -> dict:
    if env is None:
        return {}
    layer = {}
    unknown = []
    for name, value in env.items():
        if not name.startswith(_ENV_PREFIX):
            continue
        key = name[len(_ENV_PREFIX):].lower()
        if key not in _CONFIG_KEYS:
            unknown.append(name)
            continue
        layer[key] = value
    if unknown:
        raise ConfigError(f"unknown environment variables: {', '.join(sorted(unknown))}")
    return layer


def _coerce_layer(layer: dict, origin: str) -> dict:
    out = {}
    for key, value in layer.items():
        try:
            out[key] = _COERCE[key](value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key} from {origin}: {value!r}") from exc
    return out


def resolve_values(cli: dict, env=None, file=None) -> RunConfig:
    """Merge already-parsed CLI values over a config file over MAXCON_
    environment variables; draw a seed from entropy if none is given.

    cli entries equal to None mean "flag not given" and do not shadow
    lower layers.  Raises ConfigError on unknown keys, malformed
    values, or an expand=true setting combined with the nL variant
    (which never expands).
    """
    unknown = sorted(set(cli) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    merged: dict = {}
    expand_explicit = False
    for layer in (
        _coerce_layer(_env_layer(env), "environment"),
        _coerce_layer(_file_layer(file), "config file"),
        {k: v for k, v in cli.items() if v is not None},
    ):
        if "expand" in layer:
            expand_explicit = True
        merged.update(layer)
    if expand_explicit and merged.get("expand") and merged.get("variant") == "nL":
        raise ConfigError("variant nL never expands; drop expand=true or pick another variant")
    if merged.get("variant") == "nL":
        # record what actually happens, and keep resolved configs
        # re-resolvable without tripping the conflict check
        merged["expand"] = False
    if merged.get("seed") is None:
        merged["seed"] = secrets.randbits(32)
    return RunConfig(**merged)


def shared_options() -> argparse.ArgumentParser:
    """Parent parser with the flag grammar shared by fit and influence.
    Defaults are None / unset sentinels so the merge can tell given
    flags from absent ones."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--data", help="input dataset CSV")
    parser.add_argument("--eps", type=float, help="inlier residual threshold")
    parser.add_argument("--m", type=int, help="samples per influence estimate")
    parser.add_argument("--q", type=float, help="Bernoulli sampling bias in (0, 1)")
    parser.add_argument("--seed", type=int, help="RNG seed (default: OS entropy, recorded)")
    parser.add_argument("--variant", choices=VARIANTS, help="solver variant")
    parser.add_argument(
        "--no-expand", action="store_true", dest="no_expand",
        help="skip the final local expansion",
    )
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--out", help="output path")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="increase log verbosity (repeatable)",
    )
    return parser


def cli_values(namespace: argparse.Namespace) -> dict:
    """Extract the RunConfig-relevant entries from a parsed namespace."""
    values = {
        key: getattr(namespace, key, None)
        for key in _CONFIG_KEYS
        if key not in ("expand", "verbose")
    }
    values["expand"] = False if getattr(namespace, "no_expand", False) else None
    verbose = getattr(namespace, "verbose", 0)
    values["verbose"] = verbose if verbose else None
    return values


def resolve_config(argv, env=None, file=None) -> RunConfig:
    """Parse argv with the shared grammar and merge all layers.

    file is a fallback config source (path or mapping); a --config
    flag inside argv takes precedence over it.
    """
    parser = argparse.ArgumentParser(prog="maxcon", parents=[shared_options()])
    namespace = parser.parse_args(argv)
    source = namespace.config if namespace.config is not None else file
    return resolve_values(cli_values(namespace), env=env, file=source)
