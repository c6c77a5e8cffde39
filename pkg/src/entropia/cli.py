"""Command-line entry point: ``entropia <task> --system <name> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import TASKS, ExperimentConfig, _floats, _ints, load_config
from .errors import ConfigError, EntropiaError
from .runner import run
from .zoo import ZOO_NAMES

log = logging.getLogger("entropia")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="entropia",
        description="Entropy estimates and analytic bounds for maps on tori and cubes.",
        epilog="systems: " + ", ".join(ZOO_NAMES) + "; budget via ENTROPIA_BUDGET_SECONDS. "
               "Exit status 0 ok, 1 verdict failure or budget exhausted, 2 config error.")
    p.add_argument("task", choices=TASKS)
    p.add_argument("--config", help="key=value config file with [system] and [experiment] sections")
    p.add_argument("--system", help="zoo system name, e.g. doubling, rotation:0.3, cat")
    p.add_argument("--eps", help="decreasing eps ladder, comma separated (2^-4 and 1/8 accepted)")
    p.add_argument("--grid-g", type=int, help="lattice step 2^-g")
    p.add_argument("--window", help="fit window a,b")
    p.add_argument("--N-proxy", dest="N_proxy", type=int, help="steps standing in for the infinite ball")
    p.add_argument("--centers", type=int, help="quasi-random centers for local entropy")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--budget", type=float, help="time budget in seconds")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {"task": args.task}
    try:
        if args.system:
            over["system"] = args.system
        if args.eps is not None:
            over["eps_ladder"] = _floats(args.eps)
        if args.window is not None:
            over["n_window"] = _ints(args.window)
    except ValueError as exc:
        raise ConfigError(f"cannot parse command-line value: {exc}") from exc
    for key, val in (("grid_g", args.grid_g), ("N_proxy", args.N_proxy), ("centers", args.centers),
                     ("seed", args.seed), ("output_dir", args.out), ("workers", args.workers),
                     ("budget_seconds", args.budget)):
        if val is not None:
            over[key] = val
    cfg = replace(cfg, **over)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        rec = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EntropiaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        print(rec.summary())
        for text in rec.reports.values():
            print(text)
        log.info("outputs written to %s", rec.config.output_dir)
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
