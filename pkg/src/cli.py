# src/cli.py
# Command line entry point: python -m src.cli --config run.cfg

import argparse
import logging
import sys
from typing import List, Optional

from .config import load_config
from .errors import ConfigError, SimulationError
from .harness import run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hetnet-sim",
        description="Monte Carlo stochastic-geometry experiments for multi-tier wireless networks.",
    )
    p.add_argument("--config", required=True, help="path to a key = value run configuration")
    p.add_argument("--out", default=None, help="CSV output path (overrides the config)")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides the config)")
    p.add_argument("--threads", type=int, default=None, help="worker count, 0 = all cores")
    p.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config).with_overrides(out=args.out, seed=args.seed, threads=args.threads)
    except (ConfigError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        text = run(config)
    except (SimulationError, ValueError, ArithmeticError, OSError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    if not config.out:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
