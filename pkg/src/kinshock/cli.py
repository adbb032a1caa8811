"""Command line entry point: ``kinshock <scenario> --config <file> [--out dir] [--seed n]``."""

from __future__ import annotations

import argparse
import sys

from .config import SCENARIOS, parse_config
from .errors import ConfigError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def build_parser():
    ap = argparse.ArgumentParser(prog="kinshock", description="Run a kinshock scenario.")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="random seed (overrides the config)")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        with open(args.config) as fh:
            config = parse_config(fh.read(), scenario_override=args.scenario)
    except OSError as exc:
        print(f"kinshock: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"kinshock: config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        if args.seed < 0:
            print("kinshock: --seed must be nonnegative", file=sys.stderr)
            return EXIT_USAGE
        config.seed = args.seed
    if args.out:
        config.out = args.out

    from .runner import run

    manifest = run(config)
    for name, verdict in manifest.verdicts.items():
        print(f"{verdict:5s} {name}")
    print(f"manifest: {config.out}/manifest.json")
    return EXIT_FAIL if manifest.failed else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
