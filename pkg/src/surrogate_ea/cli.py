"""Command line entry point: ``run`` a single cell or a ``grid`` from a config file.

Exit codes: 0 full success, 2 when some replicates failed, 1 on a config error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Dict, List, Optional

from .benchmarks import DEFAULT_BOUNDS, FUNCTIONS
from .harness import (FORMATS, ConfigError, config_from_mapping, read_config_file,
                      render_table, run_experiment)
from .optimizers import METHODS

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _bounds_help() -> str:
    return ", ".join(f"{f} [{lo:g}, {hi:g}]" for f, (lo, hi) in DEFAULT_BOUNDS.items())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="surrogate-ea",
                description="Surrogate-assisted GA experiments. Default bounds: " + _bounds_help())
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="replicated runs of one method on one problem")
    run.add_argument("--method", required=True, choices=sorted(METHODS))
    run.add_argument("--function", required=True, choices=list(FUNCTIONS))
    run.add_argument("--dim", required=True, type=int)
    run.add_argument("--noisy", action="store_true", default=None,
                     help="add N(0,1) observation noise; fitness is still scored clean")
    run.add_argument("--generations", type=int)
    run.add_argument("--replicates", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--budget", type=int, help="cap on true evaluations per run")
    run.add_argument("--target", type=float, help="stop once the clean best reaches this")
    run.add_argument("--config", help="key = value file; flags given here win")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="extra config key, e.g. dafhea.policy.k=1 (repeatable)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--format", choices=FORMATS)
    run.add_argument("--jobs", type=int)

    grid = sub.add_parser("grid", help="full method x function x dimension grid from a config")
    grid.add_argument("--config", required=True)
    grid.add_argument("--out", help="output directory (overrides the config)")
    grid.add_argument("--format", choices=FORMATS)
    grid.add_argument("--jobs", type=int)
    return p


def _mapping(args) -> Dict[str, str]:
    kv = read_config_file(args.config) if args.config else {}
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        kv[k.strip()] = v.strip()
    flags = {"generations": "generations", "replicates": "replicates", "seed": "seed",
             "budget": "budget", "target": "target", "out": "out", "format": "format",
             "jobs": "jobs"}
    if args.command == "run":
        kv["methods"] = args.method
        kv["functions"] = args.function
        kv["dims"] = str(args.dim)
        if args.noisy is not None:
            kv["noisy"] = "true"
        elif kv.get("noisy", "false").strip().lower() == "both":
            kv["noisy"] = "false"
    for attr, key in flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            kv[key] = str(value)
    return kv


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_mapping(_mapping(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows, raw = run_experiment(cfg)
    sys.stdout.write(render_table(rows, "markdown"))
    failed = [r for r in raw if r["status"] != "ok"]
    for r in failed:
        print(f"failed: {r['method']} {r['function']} dim={r['dim']} noisy={r['noisy']} "
              f"seed={r['seed']}: {r['error']}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
