"""Rayleigh channel sampling and paired Monte-Carlo sweeps behind the power
curves (iterations trace, power vs gamma1, power vs harvesting target)."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import statistics
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .algorithms import SolverOptions, run_algorithm1, run_algorithm2
from .baselines import tdma_min_power
from .errors import SecnomaError, UnattainableEHError
from .model import ChannelRealization, EhModel, Requirements
from .units import dbm_to_watt

log = logging.getLogger(__name__)

ALGORITHMS = ("sdr", "cost")
BASELINES = ("tdma",)
OK_STATUSES = ("converged", "max-iters")

_RUNNERS = {"sdr": run_algorithm1, "cost": run_algorithm2, "tdma": tdma_min_power}


@dataclass(frozen=True)
class ExperimentConfig:
    n_antennas: int = 10
    var_h1: float = 2.0
    var_h2: float = 1.0
    var_g: float = 1.5
    sigma1_sq: float = dbm_to_watt(-120.0)
    sigma2_sq: float = dbm_to_watt(-120.0)
    sigma_e_sq: float = dbm_to_watt(-120.0)
    p_max: float = 0.024
    a: float = 1500.0
    b: float = 0.0022
    gamma1: tuple = (3.0,)
    gamma2: tuple = (1.5,)
    upsilon_e: tuple = (1e-3,)
    trials: int = 100
    seed: int = 0
    algorithms: tuple = ALGORITHMS
    baseline: str = "none"
    xi: float = 1e-4
    max_iters: int = 50
    alpha0: float = 1.0
    rand_samples: int = 1000
    rank_tol: float = 1e-6
    workers: int = 1
    trajectories: bool = False

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "upsilon_e", "algorithms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        for name in ("var_h1", "var_h2", "var_g", "sigma1_sq", "sigma2_sq", "sigma_e_sq"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
        if self.baseline not in BASELINES + ("none",):
            raise ValueError(f"unknown baseline {self.baseline!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        # validated here so a bad config fails before any trial runs
        self.eh_model()
        self.solver_options()

    def eh_model(self) -> EhModel:
        return EhModel(self.p_max, self.a, self.b)

    def solver_options(self, seed: int = 0) -> SolverOptions:
        return SolverOptions(
            xi=self.xi,
            max_iters=self.max_iters,
            alpha0=self.alpha0,
            rand_samples=self.rand_samples,
            rank_tol=self.rank_tol,
            seed=seed,
        )

    def grid(self):
        """Requirement points in row-major order (gamma1, gamma2, upsilon_e)."""
        return [
            Requirements(g1, g2, u)
            for g1, g2, u in itertools.product(self.gamma1, self.gamma2, self.upsilon_e)
        ]

    def runners(self) -> tuple:
        extra = (self.baseline,) if self.baseline != "none" else ()
        return self.algorithms + extra


def sample_channel(seed: int, cfg: ExperimentConfig = ExperimentConfig()) -> ChannelRealization:
    """One Rayleigh draw, deterministic in ``seed``.

    When the user-2 draw is the stronger one the two user vectors swap places,
    so user 1 is always the stronger user.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    n = cfg.n_antennas

    def cn(var):
        return math.sqrt(var / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))

    h1, h2, g = cn(cfg.var_h1), cn(cfg.var_h2), cn(cfg.var_g)
    if np.linalg.norm(h1) < np.linalg.norm(h2):
        h1, h2 = h2, h1
    return ChannelRealization(h1, h2, g, cfg.sigma1_sq, cfg.sigma2_sq, cfg.sigma_e_sq)


@dataclass
class TrialResult:
    trial: int
    seed: int
    digest: str
    gamma1: float
    gamma2: float
    upsilon_e: float
    algorithm: str
    power_W: float
    iterations: int
    status: str
    message: str = ""
    trajectory: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status in OK_STATUSES and math.isfinite(self.power_W)


def run_one(algorithm: str, ch, req, eh, opts):
    """Run one algorithm, turning package errors into a status."""
    try:
        rep = _RUNNERS[algorithm](ch, req, eh, opts)
    except UnattainableEHError as exc:
        return None, "unattainable-eh", str(exc)
    except (SecnomaError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.warning("%s failed: %s", algorithm, exc)
        return None, "error", f"{type(exc).__name__}: {exc}"
    return rep, rep.status, rep.message


def _trial(cfg: ExperimentConfig, req: Requirements, trial: int) -> list[TrialResult]:
    seed = cfg.seed + trial
    ch = sample_channel(seed, cfg)
    eh = cfg.eh_model()
    out = []
    for algo in cfg.runners():
        rep, status, msg = run_one(algo, ch, req, eh, cfg.solver_options(seed))
        out.append(
            TrialResult(
                trial=trial,
                seed=seed,
                digest=ch.digest(),
                gamma1=req.gamma1,
                gamma2=req.gamma2,
                upsilon_e=req.upsilon_e,
                algorithm=algo,
                power_W=rep.final_power if rep is not None else math.nan,
                iterations=rep.iterations if rep is not None else 0,
                status=status,
                message=msg,
                trajectory=list(rep.objective_trajectory) if rep is not None and cfg.trajectories else [],
            )
        )
    return out


def run_sweep(cfg: ExperimentConfig, progress=None) -> list[TrialResult]:
    """Every selected algorithm (and the baseline) on the same channel per
    trial, for every grid point. Failures end up in the status field.

    Work units are (grid point, trial); with ``cfg.workers > 1`` they run in
    a process pool and are merged back in unit order.
    """
    units = [(req, t) for req in cfg.grid() for t in range(cfg.trials)]
    if cfg.workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            futures = [pool.submit(_trial, cfg, req, t) for req, t in units]
            chunks = []
            for k, f in enumerate(futures):
                chunks.append(f.result())
                if progress:
                    progress(k + 1, len(units))
    else:
        chunks = []
        for k, (req, t) in enumerate(units):
            chunks.append(_trial(cfg, req, t))
            if progress:
                progress(k + 1, len(units))
    return [r for chunk in chunks for r in chunk]


def summarize(results) -> list[dict]:
    """Per (grid point, algorithm) aggregates. Failed trials are left out of
    the power and iteration statistics and counted in ``feasible_rate``."""
    groups: dict = {}
    for r in results:
        groups.setdefault((r.gamma1, r.gamma2, r.upsilon_e, r.algorithm), []).append(r)
    out = []
    for (g1, g2, u, algo), rs in sorted(groups.items()):
        good = [r for r in rs if r.ok]
        powers = sorted(r.power_W for r in good)
        iters = sorted(r.iterations for r in good)
        out.append(
            {
                "gamma1": g1,
                "gamma2": g2,
                "upsilon_e_W": u,
                "algorithm": algo,
                "trials": len(rs),
                "feasible": len(good),
                "feasible_rate": len(good) / len(rs),
                # fsum is exact, so the mean does not depend on trial order
                "mean_power_W": math.fsum(powers) / len(powers) if powers else math.nan,
                "median_power_W": statistics.median(powers) if powers else math.nan,
                "mean_iterations": math.fsum(iters) / len(iters) if iters else math.nan,
                "statuses": dict(sorted(Counter(r.status for r in rs).items())),
            }
        )
    return out


CSV_COLUMNS = ("trial", "gamma1", "gamma2", "upsilon_e_W", "algorithm", "power_W", "iterations", "status")


def results_csv(results, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow(
            [r.trial, repr(r.gamma1), repr(r.gamma2), repr(r.upsilon_e), r.algorithm,
             repr(r.power_W), r.iterations, r.status]
        )  # fmt: skip
    return buf.getvalue()


def trajectories_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("trial", "gamma1", "gamma2", "upsilon_e_W", "algorithm", "iteration", "objective_W"))
    for r in results:
        for k, v in enumerate(r.trajectory, start=1):
            w.writerow([r.trial, repr(r.gamma1), repr(r.gamma2), repr(r.upsilon_e), r.algorithm, k, repr(v)])
    return buf.getvalue()


def summary_json(results, cfg: ExperimentConfig) -> str:
    return json.dumps({"config": asdict(cfg), "aggregates": summarize(results)}, indent=2, allow_nan=True)


# ---------------------------------------------------------------------------
# figure presets

_DBW = (-36.0, -33.0, -30.0, -27.0, -24.0, -21.0)


def fig2_config(**overrides) -> ExperimentConfig:
    """One realization, gamma2 = 1.5, gamma1 in {3, 4}, objective traces kept."""
    base = ExperimentConfig(gamma1=(3.0, 4.0), gamma2=(1.5,), trials=1, trajectories=True)
    return replace(base, **overrides)


def fig3_config(**overrides) -> ExperimentConfig:
    """Power against gamma1 for gamma2 in {1.5, 2}."""
    base = ExperimentConfig(gamma1=(2.0, 2.5, 3.0, 3.5, 4.0), gamma2=(1.5, 2.0))
    return replace(base, **overrides)


def fig4_config(**overrides) -> ExperimentConfig:
    """Power against the harvesting target with the TDMA baseline, gamma1 = 3."""
    base = ExperimentConfig(
        gamma1=(3.0,),
        gamma2=(1.5,),
        upsilon_e=tuple(10.0 ** (d / 10.0) for d in _DBW),
        baseline="tdma",
    )
    return replace(base, **overrides)


PRESETS = {"fig2": fig2_config, "fig3": fig3_config, "fig4": fig4_config}
