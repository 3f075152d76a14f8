"""Command-line entry point: ``biglearn-gmm <command> --config FILE [options]``.

The JSON config mirrors :class:`~biglearn_gmm.experiments.ExperimentSpec`
(nested ``config`` and ``synthetic`` objects); flags given on the command line
override it.
"""

import argparse
import json
import logging
import sys

from .errors import BigLearnError
from .experiments import COMMANDS, METHODS, ExperimentSpec, run

FULL_SCALE = {"outer_iters": 10000, "tail_window": 200}


def parse_seeds(text):
    """``"3"``, ``"0..19"`` (inclusive) or ``"1,4,9"``."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="biglearn-gmm", description="Big-learning EM for Gaussian mixtures")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON experiment config")
    seeds = parser.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int)
    seeds.add_argument("--seeds", type=parse_seeds, help="N..M inclusive, or a comma list")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--method", choices=METHODS)
    parser.add_argument("--dataset", help="training data (sparse text or .csv)")
    parser.add_argument("--model", help="model JSON (evaluate)")
    parser.add_argument("--scaling", help="scaling JSON written by train (evaluate)")
    parser.add_argument("--full-scale", action="store_true",
                        help="10000 outer iterations with a 200-iteration tail window")
    parser.add_argument("--jobs", type=int, help="worker processes for independent seeds")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def spec_from_args(args):
    doc = {}
    if args.config:
        with open(args.config) as f:
            doc = json.load(f)
    doc["command"] = args.command
    if args.seed is not None:
        doc["seeds"] = [args.seed]
    elif args.seeds is not None:
        doc["seeds"] = args.seeds
    for key in ("out", "method", "dataset", "model", "scaling", "jobs"):
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    if args.full_scale:
        doc["config"] = {**doc.get("config", {}), **FULL_SCALE}
    return ExperimentSpec.from_dict(doc)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = spec_from_args(args)
        run(spec)
    except (BigLearnError, ValueError, OSError) as exc:
        print(f"biglearn-gmm: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
