import pytest

from secnoma.config import KEYS, dump_config, load_config, parse_config
from secnoma.errors import ConfigError
from secnoma.experiments import ExperimentConfig, fig3_config, fig4_config
from secnoma.units import dbm_to_watt


def test_defaults_are_table3():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.sigma1_sq == pytest.approx(1e-15)
    assert (cfg.p_max, cfg.a, cfg.b, cfg.xi) == (0.024, 1500.0, 0.0022, 1e-4)


def test_units_and_lists():
    cfg = parse_config(
        'noise.sigma_e_sq = "-110 dBm"\n'
        'grid.upsilon_e = ["1 mW", "-27 dBW", 0.002]\n'
        "grid.gamma1 = 2\n"
        'run.algorithms = ["cost"]\n'
        "[solver]\nmax_iters = 7\n"
    )
    assert cfg.sigma_e_sq == pytest.approx(dbm_to_watt(-110))
    assert cfg.upsilon_e == pytest.approx((1e-3, 10 ** -2.7, 2e-3))
    assert cfg.gamma1 == (2.0,)
    assert cfg.algorithms == ("cost",)
    assert cfg.max_iters == 7


@pytest.mark.parametrize("cfg", [ExperimentConfig(), fig3_config(seed=2**63), fig4_config(trajectories=True)])
def test_round_trip(cfg):
    assert parse_config(dump_config(cfg)) == cfg


def test_dump_covers_every_key():
    text = dump_config(ExperimentConfig())
    assert [line.split(" = ")[0] for line in text.splitlines() if line] == list(KEYS)


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("run.trials = 3\nrun.speed = 1\n", 2, "unknown key"),
        ("run.trials = 3\n\nrun.trials2 = 1\n", 3, "unknown key"),
        ('run.trials = "many"\n', 1, "integer"),
        ("run.trials = 0\n", 1, "trials"),
        ('grid.gamma1 = []\n', 1, "empty"),
        ('noise.sigma1_sq = "3 parsecs"\n', 1, "sigma1_sq"),
        ('run.baseline = "fdma"\n', 1, "baseline"),
        ("run.seed = -4\n", 1, "seed"),
    ],
)
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "exp.toml")
    msg = str(err.value)
    assert msg.startswith(f"exp.toml:{line}:"), msg
    assert fragment in msg


def test_syntax_error():
    with pytest.raises(ConfigError, match="exp.toml"):
        parse_config("run.trials = = 3\n", "exp.toml")


def test_load_config(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("run.trials = 5\n")
    assert load_config(p).trials == 5
    assert load_config(p, fig4_config()).baseline == "tdma"
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.toml")
