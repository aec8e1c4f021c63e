"""Command line entry point: ``secnoma {solve,sweep,fig2,fig3,fig4,check}``.

Exit codes: 0 success, 1 infeasible instance (``solve``) or failed check,
2 configuration, usage or file-system error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from .checks import run_checks
from .config import apply_overrides, dump_config, read_config_text, read_overrides
from .errors import ConfigError
from .experiments import (
    PRESETS,
    ExperimentConfig,
    results_csv,
    run_one,
    run_sweep,
    sample_channel,
    summary_json,
    trajectories_csv,
)
from .model import ChannelRealization, EhModel, Requirements

log = logging.getLogger("secnoma")

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2
INFEASIBLE_STATUSES = ("infeasible", "unattainable-eh")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat dotted-key TOML config file")
    common.add_argument("--out", metavar="DIR", help="output directory (solve: JSON file)")
    common.add_argument("--seed", type=_u64, metavar="U64", help="master seed")
    common.add_argument("--trials", type=_positive, metavar="N", help="trials per grid point")
    common.add_argument("--algo", choices=("sdr", "cost", "both"), help="algorithms to run (default both)")
    common.add_argument("--baseline", choices=("tdma", "none"), help="also run the TDMA baseline")
    common.add_argument("--workers", type=_positive, metavar="N", help="parallel worker processes")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp line from CSV output")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="secnoma", description="Secure NOMA SWIPT beamforming experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="solve one instance and print the reports as JSON")
    s.add_argument("--instance", metavar="PATH", help="JSON instance file (channel and optional requirements)")
    sub.add_parser("sweep", parents=[common], help="run a sweep from a config file")
    for name in PRESETS:
        sub.add_parser(name, parents=[common], help=f"preset sweep behind {name.replace('fig', 'Fig. ')}")
    sub.add_parser("check", parents=[common], help="run the property suites")
    return p


def _effective_config(args, base: ExperimentConfig) -> ExperimentConfig:
    cfg = base
    if args.config:
        text = read_config_text(args.config)
        cfg = apply_overrides(cfg, read_overrides(text, args.config), text, args.config)
    flags = {}
    if args.seed is not None:
        flags["seed"] = args.seed
    if args.trials is not None:
        flags["trials"] = args.trials
    if args.algo is not None:
        flags["algorithms"] = ("sdr", "cost") if args.algo == "both" else (args.algo,)
    if args.baseline is not None:
        flags["baseline"] = args.baseline
    if args.workers is not None:
        flags["workers"] = args.workers
    try:
        return replace(cfg, **flags)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_instance(path: str, cfg: ExperimentConfig):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        ch = ChannelRealization.from_dict(data["channel"] if "channel" in data else data)
        r = data.get("requirements", {})
        req = Requirements(
            r.get("gamma1", cfg.gamma1[0]), r.get("gamma2", cfg.gamma2[0]), r.get("upsilon_e", cfg.upsilon_e[0])
        )
        e = data.get("eh", {})
        eh = EhModel(e.get("p_max", cfg.p_max), e.get("a", cfg.a), e.get("b", cfg.b))
    except OSError as exc:
        raise ConfigError(f"cannot read instance {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: malformed instance: {exc}") from None
    return ch, req, eh


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def cmd_solve(args) -> int:
    cfg = _effective_config(args, ExperimentConfig())
    if args.instance:
        ch, req, eh = _load_instance(args.instance, cfg)
        seed = cfg.seed
    else:
        seed = cfg.seed
        ch = sample_channel(seed, cfg)
        req = cfg.grid()[0]
        eh = cfg.eh_model()
    reports = []
    for algo in cfg.runners():
        rep, status, msg = run_one(algo, ch, req, eh, cfg.solver_options(seed))
        d = rep.to_dict() if rep is not None else {"algorithm": algo, "status": status, "message": msg}
        d["channel_digest"] = ch.digest()
        reports.append(d)
    doc = {
        "seed": seed,
        "channel_digest": ch.digest(),
        "requirements": {"gamma1": req.gamma1, "gamma2": req.gamma2, "upsilon_e_W": req.upsilon_e},
        "reports": reports,
    }
    text = json.dumps(_jsonable(doc), indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    for d in reports:
        log.info("%s: %s, %.6e W", d["algorithm"], d["status"], d.get("final_power_W") or math.nan)
    return EXIT_INFEASIBLE if any(d["status"] in INFEASIBLE_STATUSES for d in reports) else EXIT_OK


def _run_and_write(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or "results")
    out.mkdir(parents=True, exist_ok=True)

    def progress(k, total):
        log.info("unit %d/%d", k, total)

    results = run_sweep(cfg, progress)
    header = None if args.no_timestamp else f"generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}"
    (out / "results.csv").write_text(results_csv(results, header), encoding="utf-8")
    (out / "summary.json").write_text(summary_json(results, cfg) + "\n", encoding="utf-8")
    (out / "config.toml").write_text(dump_config(cfg), encoding="utf-8")
    if cfg.trajectories:
        (out / "trajectories.csv").write_text(trajectories_csv(results), encoding="utf-8")
    bad = sum(not r.ok for r in results)
    print(f"{len(results)} rows written to {out} ({bad} failed trials)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigError("sweep needs --config PATH")
    return _run_and_write(_effective_config(args, ExperimentConfig()), args)


def cmd_check(args) -> int:
    results = run_checks()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_INFEASIBLE


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "check":
            return cmd_check(args)
        return _run_and_write(_effective_config(args, PRESETS[args.command]()), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())
