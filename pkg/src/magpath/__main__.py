"""``python -m magpath run --config FILE [--seed N] [--samples N] [--steps N] [--threads N] [--out DIR]``

Exit codes: 0 success, 2 configuration error, 3 numeric precondition
failed (for example ``t >= t*``).
"""

import argparse
import sys

from .dyson import CapacityError
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, default_config, run
from .feynman_mc import ThresholdError
from .reference_solver import StabilityError


def main(argv=None):
    parser = argparse.ArgumentParser(prog="magpath")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one experiment")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="INI config file")
    src.add_argument("--experiment", choices=sorted(EXPERIMENTS), help="use the built-in defaults")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    d = sub.add_parser("defaults", help="print the built-in config of an experiment")
    d.add_argument("name", choices=sorted(EXPERIMENTS))
    args = parser.parse_args(argv)

    try:
        if args.command == "defaults":
            sys.stdout.write(default_config(args.name).dumps())
            return 0
        cfg = ExperimentConfig.load(args.config) if args.config else default_config(args.experiment)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("seed must fit in an unsigned 64-bit integer")
            cfg.set("experiment", "seed", args.seed)
        if args.samples is not None:
            cfg.set("budget", "n_samples", args.samples)
        if args.steps is not None:
            cfg.set("budget", "n_steps", args.steps)
        if args.threads is not None:
            cfg.set("experiment", "threads", args.threads)
        if args.out is not None:
            cfg.set("experiment", "out", args.out)
        files = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ThresholdError, CapacityError, StabilityError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 3
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
