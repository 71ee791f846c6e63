"""``python -m nfhomog <mode> [--config PATH] [--out DIR] [--threads K] [--seed S]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .experiment import MODES, ValidationError, default_config, load_config, run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nfhomog", description="Neural field homogenization experiments.")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="YAML configuration (defaults to the built-in setup)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--threads", type=int, help="worker threads for per-eps solves")
    ap.add_argument("--seed", type=int, help="seed for randomized property suites")
    ap.add_argument("-q", "--quiet", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config else default_config()
    except (OSError, ValueError) as exc:
        logging.error("cannot load configuration: %s", exc)
        return 2
    try:
        return run(cfg, args.mode, args.out, args.threads, args.seed)
    except ValidationError as exc:
        for v in exc.violations:
            logging.error("invalid configuration: %s", v)
        return 2


if __name__ == "__main__":
    sys.exit(main())
