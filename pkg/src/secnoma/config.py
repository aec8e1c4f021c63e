"""Experiment configuration files.

The format is TOML restricted to flat dotted keys, e.g.::

    channel.n_antennas = 10
    noise.sigma1_sq = "-120 dBm"
    grid.gamma1 = [2, 2.5, 3]
    grid.upsilon_e = ["1 mW", "2 mW"]
    run.baseline = "tdma"

Powers take a number (Watts) or a string with a unit suffix (W, mW, uW,
dBm, dBW). Missing keys keep their Table III defaults.
"""

from __future__ import annotations

import math
import sys
from dataclasses import replace

from .errors import ConfigError
from .experiments import ExperimentConfig
from .units import parse_power

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# dotted key -> (field, kind)
KEYS = {
    "channel.n_antennas": ("n_antennas", "int"),
    "channel.var_h1": ("var_h1", "float"),
    "channel.var_h2": ("var_h2", "float"),
    "channel.var_g": ("var_g", "float"),
    "noise.sigma1_sq": ("sigma1_sq", "power"),
    "noise.sigma2_sq": ("sigma2_sq", "power"),
    "noise.sigma_e_sq": ("sigma_e_sq", "power"),
    "eh.p_max": ("p_max", "power"),
    "eh.a": ("a", "float"),
    "eh.b": ("b", "power"),
    "grid.gamma1": ("gamma1", "floats"),
    "grid.gamma2": ("gamma2", "floats"),
    "grid.upsilon_e": ("upsilon_e", "powers"),
    "run.trials": ("trials", "int"),
    "run.seed": ("seed", "int"),
    "run.algorithms": ("algorithms", "strs"),
    "run.baseline": ("baseline", "str"),
    "run.workers": ("workers", "int"),
    "run.trajectories": ("trajectories", "bool"),
    "solver.xi": ("xi", "float"),
    "solver.max_iters": ("max_iters", "int"),
    "solver.alpha0": ("alpha0", "float"),
    "solver.rand_samples": ("rand_samples", "int"),
    "solver.rank_tol": ("rank_tol", "float"),
}
_FIELD_KEY = {f: k for k, (f, _) in KEYS.items()}


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _line_of(text: str, key: str) -> int | None:
    head = key.split(".")
    for n, line in enumerate(text.splitlines(), start=1):
        lhs = line.split("=", 1)[0].replace(" ", "").replace('"', "")
        if "=" in line and lhs.split(".") == head:
            return n
    return None


def _convert(value, kind: str):
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"expected an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected a number, got {value!r}")
        return float(value)
    if kind == "power":
        if isinstance(value, bool):
            raise ValueError(f"expected a power, got {value!r}")
        return parse_power(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValueError(f"expected true or false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ValueError(f"expected a string, got {value!r}")
        return value
    if not isinstance(value, list):
        value = [value]
    one = {"floats": "float", "powers": "power", "strs": "str"}[kind]
    return tuple(_convert(v, one) for v in value)


def read_overrides(text: str, source: str = "<config>") -> dict:
    """Field values set explicitly in config text, converted to Watts etc."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    for key, value in _flatten(raw).items():
        where = f"{source}:{_line_of(text, key) or '?'}"
        if key not in KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        name, kind = KEYS[key]
        try:
            values[name] = _convert(value, kind)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{where}: {key}: {exc}") from None
        if kind in ("floats", "powers") and not values[name]:
            raise ConfigError(f"{where}: {key} is empty")
    return values


def apply_overrides(base: ExperimentConfig, values: dict, text: str = "", source: str = "<config>") -> ExperimentConfig:
    try:
        return replace(base, **values)
    except ValueError as exc:
        named = [n for n in values if n in str(exc)]
        line = _line_of(text, _FIELD_KEY[named[0]]) if named and text else None
        raise ConfigError(f"{source}:{line or '?'}: {exc}") from None


def parse_config(text: str, source: str = "<config>", base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse config text on top of ``base`` (Table III defaults when omitted);
    errors carry the source name and line number."""
    values = read_overrides(text, source)
    return apply_overrides(base or ExperimentConfig(), values, text, source)


def read_config_text(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config(read_config_text(path), str(path), base)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return "[" + ", ".join(_fmt(v) for v in value) + "]"


def dump_config(cfg: ExperimentConfig) -> str:
    """Config text that :func:`parse_config` turns back into ``cfg``. Powers
    are written in Watts with full precision."""
    lines = []
    section = None
    for key, (name, _) in KEYS.items():
        head = key.split(".")[0]
        if head != section:
            if section is not None:
                lines.append("")
            section = head
        lines.append(f"{key} = {_fmt(getattr(cfg, name))}")
    return "\n".join(lines) + "\n"
