"""Command line entry point.

    drslab <experiment> --config <path> [--seed-offset N] [--output-dir P]

Experiments: table1, ablation, sweep, oracle, interp. Output directory
precedence: --output-dir flag, then DRSLAB_OUTPUT_DIR, then the config file,
then runs/<experiment>. Failures exit nonzero with a JSON error on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import DrsLabError
from .experiments import EXPERIMENTS, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drslab",
        description="GAN sample filtering experiments on a 2D Gaussian grid.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed-offset", type=int, default=0,
                       help="added to every configured seed")
        p.add_argument("--output-dir", default=None,
                       help="where artifacts go (overrides DRSLAB_OUTPUT_DIR and config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    output_dir = args.output_dir or os.environ.get("DRSLAB_OUTPUT_DIR")
    try:
        config = load_config(
            source=args.config,
            experiment=args.experiment,
            output_dir=output_dir,
            seed_offset=args.seed_offset,
        )
        progress = None if args.quiet else (lambda msg: print(msg, flush=True))
        summary = run_experiment(config, progress=progress)
    except DrsLabError as err:
        json.dump({"error": type(err).__name__, "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except OSError as err:
        json.dump({"error": type(err).__name__, "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    print(json.dumps({"experiment": config.experiment,
                      "output_dir": str(config.resolved_output_dir()),
                      "summary": summary}, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
