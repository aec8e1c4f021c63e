import math

import pytest

from secnoma.errors import ConfigError
from secnoma.units import dbm_to_watt, dbw_to_watt, parse_power, watt_to_dbm, watt_to_dbw


def test_noise_floor():
    assert dbm_to_watt(-120) == pytest.approx(1e-15, rel=1e-12)


def test_fig2_target_is_one_milliwatt():
    assert dbw_to_watt(-30) == pytest.approx(1e-3, rel=1e-12)


@pytest.mark.parametrize(
    "text, watts",
    [("24 mW", 0.024), ("-120dBm", 1e-15), ("-30 dBW", 1e-3), ("0.5", 0.5), ("3 W", 3.0), ("7uW", 7e-6), (2, 2.0)],
)
def test_parse_power(text, watts):
    assert parse_power(text) == pytest.approx(watts, rel=1e-12)


@pytest.mark.parametrize("text", ["abc", "5 furlongs", "", "1e"])
def test_parse_power_rejects(text):
    with pytest.raises(ConfigError):
        parse_power(text)


def test_round_trips():
    for w in (1e-15, 1e-3, 0.024, 2.0):
        assert dbm_to_watt(watt_to_dbm(w)) == pytest.approx(w, rel=1e-12)
        assert dbw_to_watt(watt_to_dbw(w)) == pytest.approx(w, rel=1e-12)
    assert watt_to_dbw(1.0) == 0.0
    assert math.isclose(watt_to_dbm(1e-3), 0.0, abs_tol=1e-12)
