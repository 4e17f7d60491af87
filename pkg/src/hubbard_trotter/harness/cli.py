"""Command line entry point ``hubbard-trotter``.

Exit codes: 0 success, 2 configuration error, 3 backend capability error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..circuit import decompose_to_basis
from ..exact import KrylovConvergenceError
from ..mitigation import MitigationPlan, ZneFitError
from .config import ConfigError, ExperimentConfig, load_config, preset, with_env_overrides
from .report import PLOT_KINDS, depth_report, emit_plot_data, read_results, write_results
from .sweep import CapabilityError, run_sweep, schedule_for

EXIT_OK, EXIT_CONFIG, EXIT_CAPABILITY, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("hubbard_trotter")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="YAML experiment file")
    src.add_argument("--preset", help="named preset, e.g. paper-L10")
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("--backend", choices=("statevector", "exact", "mps", "noisy"))
    p.add_argument("--r-max", type=int, help="last Trotter step count")
    p.add_argument("--order", choices=("first", "second", "second-optimized"))
    p.add_argument("--seed", type=int)


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else preset(args.preset)
    cfg = with_env_overrides(cfg)
    try:
        if args.backend:
            cfg = replace(cfg, backend=args.backend)
        if args.r_max is not None:
            cfg = replace(cfg, plan=replace(cfg.plan, r_max=args.r_max))
        if args.order:
            cfg = replace(cfg, plan=replace(cfg.plan, order=args.order))
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.out:
            cfg = replace(cfg, output=replace(cfg.output, dir=str(args.out)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _print_points(rs) -> None:
    print("r,tau,value,spread")
    for p in rs.points:
        print(f"{p.r},{p.tau!r},{p.value!r},{p.spread!r}")


def cmd_build(args) -> int:
    cfg = _resolve(args)
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    sched = schedule_for(cfg, prepare_neel=cfg.plan.prepare_neel)
    for r in cfg.plan.r_values:
        c = sched.circuit(r)
        if args.basis:
            c = decompose_to_basis(c, keep_barriers=True)
        name = f"circuit_{cfg.plan.order}_L{cfg.params.L}_r{r}"
        if args.format == "json":
            path = out / f"{name}.json"
            path.write_text(c.to_json() + "\n", encoding="utf-8")
        else:
            path = out / f"{name}.txt"
            path.write_text(c.to_text(), encoding="utf-8")
        print(path)
    return EXIT_OK


def _evolve(cfg: ExperimentConfig) -> int:
    rs = run_sweep(cfg)
    for path in write_results(rs, cfg.output.dir, cfg.output.record_timings):
        log.info("wrote %s", path)
    _print_points(rs)
    return EXIT_OK


def cmd_evolve(args) -> int:
    return _evolve(_resolve(args))


def cmd_mitigate(args) -> int:
    cfg = _resolve(args)
    plan = cfg.mitigation or MitigationPlan()
    if args.trajectories is not None:
        plan = replace(plan, trajectories=args.trajectories)
    return _evolve(replace(cfg, backend="noisy", mitigation=plan))


def cmd_depth(args) -> int:
    cfg = _resolve(args)
    table = depth_report(cfg)
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "depth.csv").write_text(table.to_csv(), encoding="utf-8")
    sys.stdout.write(table.to_csv())
    if not table.l_independent:
        log.warning("depth differs between chain lengths %s", table.checked_lengths)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    try:
        rs = read_results(args.results)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot read results from {args.results}: {exc}") from None
    kinds = PLOT_KINDS if args.kind == "all" else (args.kind,)
    out = args.out or (Path(args.results) if Path(args.results).is_dir() else Path(args.results).parent)
    for kind in kinds:
        if args.kind == "all" and kind == "mps-diagnostics" and rs.config.get("backend") != "mps":
            continue
        try:
            paths = emit_plot_data(rs, kind, out)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for p in paths:
            print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hubbard-trotter",
        description="Trotterized Fermi-Hubbard dynamics: circuits, sweeps, depths and mitigation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write the Trotter circuit for each r")
    _add_config_args(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--basis", action="store_true", help="rewrite into the native gate basis")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("evolve", help="run the sweep on the configured backend")
    _add_config_args(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("depth", help="depth and CZ-count table for all three orders")
    _add_config_args(p)
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("mitigate", help="noisy sweep through the full mitigation pipeline")
    _add_config_args(p)
    p.add_argument("--trajectories", type=int, help="noise trajectories per executed circuit")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("plotdata", help="write plot-ready CSV files from saved results")
    p.add_argument("--results", type=Path, required=True, help="results.json or its directory")
    p.add_argument("--kind", choices=(*PLOT_KINDS, "all"), default="all")
    p.add_argument("--out", type=Path, help="output directory (defaults to the results directory)")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (KrylovConvergenceError, ZneFitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
