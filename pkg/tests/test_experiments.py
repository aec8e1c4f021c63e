import csv
import io
import json
import math
import random
from dataclasses import replace

import numpy as np
import pytest

from secnoma.experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    TrialResult,
    fig2_config,
    fig3_config,
    fig4_config,
    results_csv,
    run_one,
    run_sweep,
    sample_channel,
    summarize,
    summary_json,
    trajectories_csv,
)
from secnoma.model import EhModel, Requirements

SMALL = ExperimentConfig(n_antennas=2, trials=2, rand_samples=50)


def test_sampler_deterministic():
    a, b = sample_channel(42), sample_channel(42)
    assert a.digest() == b.digest()
    assert np.array_equal(a.h1, b.h1) and np.array_equal(a.g, b.g)
    assert sample_channel(43).digest() != a.digest()


def test_sampler_variance():
    # the stronger-user swap biases h1 upward by under 2 % at N = 10
    h1 = np.array([sample_channel(s).h1 for s in range(10_000)])
    g = np.array([sample_channel(s).g for s in range(2_000)])
    assert np.mean(np.abs(h1) ** 2) == pytest.approx(2.0, rel=0.05)
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.5, rel=0.05)


def test_sampler_orders_users():
    cfg = ExperimentConfig(n_antennas=1, var_h1=1.0, var_h2=1.0)
    swapped = 0
    for s in range(200):
        ch = sample_channel(s, cfg)
        assert np.linalg.norm(ch.h1) >= np.linalg.norm(ch.h2)
        rng = np.random.Generator(np.random.Philox(key=s))
        first = math.sqrt(0.5) * (rng.standard_normal(1) + 1j * rng.standard_normal(1))
        swapped += not np.array_equal(first, ch.h1)
    # with equal variances about half the draws need the swap
    assert 60 < swapped < 140


def test_config_validation():
    for bad in ({"n_antennas": 0}, {"trials": 0}, {"seed": -1}, {"var_g": 0.0},
                {"algorithms": ("foo",)}, {"baseline": "fdma"}, {"workers": 0}, {"xi": 0.0}, {"a": -1.0}):  # fmt: skip
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)


def test_grid_order():
    cfg = ExperimentConfig(gamma1=(1, 2), gamma2=(3,), upsilon_e=(1e-3, 2e-3))
    assert [(r.gamma1, r.upsilon_e) for r in cfg.grid()] == [(1, 1e-3), (1, 2e-3), (2, 1e-3), (2, 2e-3)]
    assert replace(cfg, baseline="tdma").runners() == ("sdr", "cost", "tdma")


def test_empty_grid_gives_no_results():
    assert run_sweep(replace(SMALL, gamma1=())) == []


def test_sweep_pairs_channels_and_is_deterministic():
    cfg = replace(SMALL, baseline="tdma")
    res = run_sweep(cfg)
    assert len(res) == 2 * 3
    for t in range(2):
        rows = [r for r in res if r.trial == t]
        assert len({r.digest for r in rows}) == 1
        assert {r.algorithm for r in rows} == {"sdr", "cost", "tdma"}
        assert rows[0].digest == sample_channel(cfg.seed + t, cfg).digest()
    again = run_sweep(cfg)
    assert [r.power_W for r in again] == [r.power_W for r in res]
    assert all(r.ok for r in res)


def test_failures_become_statuses():
    rep, status, msg = run_one("sdr", sample_channel(0), Requirements(3, 1.5, 0.024), EhModel(), SMALL.solver_options())
    assert rep is None and status == "unattainable-eh" and msg
    res = run_sweep(replace(SMALL, upsilon_e=(1e-3, 0.024), trials=1))
    bad = [r for r in res if r.upsilon_e == 0.024]
    assert bad and all(r.status == "unattainable-eh" and not r.ok and math.isnan(r.power_W) for r in bad)
    agg = {(a["upsilon_e_W"], a["algorithm"]): a for a in summarize(res)}
    assert agg[(0.024, "sdr")]["feasible_rate"] == 0.0
    assert math.isnan(agg[(0.024, "sdr")]["mean_power_W"])
    assert agg[(1e-3, "sdr")]["feasible_rate"] == 1.0


def _fake(trial, power, algo="sdr", status="converged"):
    return TrialResult(trial, trial, "d", 3.0, 1.5, 1e-3, algo, power, 3, status)


def test_summary_permutation_invariant():
    rng = random.Random(0)
    rows = [_fake(t, 10.0 ** rng.uniform(-6, -3)) for t in range(200)] + [_fake(200, math.nan, status="infeasible")]
    a = summarize(rows)
    rng.shuffle(rows)
    b = summarize(rows)
    assert json.dumps(a) == json.dumps(b)
    assert a[0]["trials"] == 201 and a[0]["feasible"] == 200
    assert a[0]["statuses"] == {"converged": 200, "infeasible": 1}


def test_csv_layout():
    rows = [_fake(0, 1e-4), _fake(1, 2e-4, "cost")]
    text = results_csv(rows, header="generated now")
    lines = text.splitlines()
    assert lines[0] == "# generated now"
    parsed = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert float(parsed[2][CSV_COLUMNS.index("power_W")]) == 2e-4
    assert results_csv(rows).splitlines()[0] == ",".join(CSV_COLUMNS)
    doc = json.loads(summary_json(rows, SMALL))
    assert doc["config"]["n_antennas"] == 2 and len(doc["aggregates"]) == 2


def test_presets():
    f2, f3, f4 = fig2_config(), fig3_config(), fig4_config()
    assert f2.trials == 1 and f2.gamma1 == (3.0, 4.0) and f2.trajectories
    assert f3.gamma1 == (2.0, 2.5, 3.0, 3.5, 4.0) and f3.gamma2 == (1.5, 2.0)
    assert f4.baseline == "tdma" and len(f4.upsilon_e) == 6
    assert all(u < EhModel().p_max for u in f4.upsilon_e)
    assert fig4_config(trials=3).trials == 3


def test_fig2_trajectories_non_increasing():
    cfg = fig2_config(n_antennas=4)
    res = run_sweep(cfg)
    assert len(res) == 4
    for r in res:
        assert r.trajectory
        assert all(b <= a + 1e-7 for a, b in zip(r.trajectory, r.trajectory[1:]))
    lines = trajectories_csv(res).splitlines()
    assert lines[0].startswith("trial,") and len(lines) == 1 + sum(len(r.trajectory) for r in res)
