"""Batch command-line front end: list and run config-declared scenarios.

Exit codes: 0 on success, 2 on configuration errors, 3 on numeric failures.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .scenarios import ConfigError, ScenarioFailure, load_config, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="virodyn",
        description="Run virotherapy-model scenarios declared in a YAML config.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one scenario (or all)")
    run.add_argument("config", help="path to the scenario config file")
    run.add_argument("scenario", nargs="?", help="scenario name")
    run.add_argument("--all", action="store_true", help="run every scenario")
    run.add_argument("--out", default="out", help="output directory root")
    run.add_argument("--threads", type=int, default=1,
                     help="scenarios executed concurrently (they are independent)")
    run.add_argument("--seedless", action="store_true",
                     help="documents that no RNG is involved; all runs are "
                          "deterministic with or without this flag")

    lst = sub.add_parser("list", help="print the scenario catalogue")
    lst.add_argument("config", help="path to the scenario config file")
    return parser


def _cmd_list(config_path: str) -> int:
    scenarios = load_config(config_path)
    width = max(len(s.name) for s in scenarios) if scenarios else 4
    print(f"{'name':<{width}}  kind")
    for s in scenarios:
        print(f"{s.name:<{width}}  {s.kind}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    scenarios = load_config(args.config)
    if args.all == (args.scenario is not None):
        raise ConfigError("give exactly one of a scenario name or --all")
    if args.scenario is not None:
        chosen = [s for s in scenarios if s.name == args.scenario]
        if not chosen:
            raise ConfigError(f"unknown scenario {args.scenario!r}; "
                              f"try 'virodyn list {args.config}'")
    else:
        chosen = scenarios
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")

    out_dir = Path(args.out)
    if args.threads == 1 or len(chosen) == 1:
        for s in chosen:
            path = run_scenario(s, out_dir)
            print(f"{s.name}: wrote {path}")
    else:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            futures = {pool.submit(run_scenario, s, out_dir): s for s in chosen}
            for future, s in futures.items():
                path = future.result()
                print(f"{s.name}: wrote {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list":
            return _cmd_list(args.config)
        return _cmd_run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
