"""Power unit conversions. Everything inside the package is in Watts."""

import math
import re

from .errors import ConfigError


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def dbw_to_watt(dbw: float) -> float:
    return 10.0 ** (dbw / 10.0)


def watt_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0


def watt_to_dbw(w: float) -> float:
    return 10.0 * math.log10(w)


_POWER_RE = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-z]*)\s*$")

_CONVERTERS = {
    "": float,
    "w": float,
    "mw": lambda v: v * 1e-3,
    "uw": lambda v: v * 1e-6,
    "dbm": dbm_to_watt,
    "dbw": dbw_to_watt,
}


def parse_power(text) -> float:
    """Parse ``"24 mW"``, ``"-120dBm"``, ``"-30 dBW"`` or a bare number (Watts)."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _POWER_RE.match(str(text))
    if m is None:
        raise ConfigError(f"cannot parse power value {text!r}")
    value, unit = float(m.group(1)), m.group(2).lower()
    if unit not in _CONVERTERS:
        raise ConfigError(f"unknown power unit {m.group(2)!r} in {text!r}")
    return _CONVERTERS[unit](value)
