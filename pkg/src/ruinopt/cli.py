"""Command-line entry point: ``ruinopt {optimize,compare,diagnose}``.

Exit codes: 0 success, 2 config error, 3 model/feasibility error,
4 diagnostic failure, 5 I/O error.
"""

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, ModelError

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_DIAGNOSTIC, EXIT_IO = 0, 2, 3, 4, 5


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="YAML experiment file")
    common.add_argument("--seed", type=int, help="override run.master_seed")
    common.add_argument("--out", metavar="DIR", help="override run.output_dir")
    common.add_argument("--workers", type=int, help="override run.workers")
    common.add_argument("--quiet", action="store_true", help="only print errors")

    parser = argparse.ArgumentParser(prog="ruinopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("optimize", parents=[common], help="run the projected gradient method once")
    cmp_ = sub.add_parser("compare", parents=[common], help="repeated runs vs the adjustment coefficient")
    cmp_.add_argument("--reps", type=int, help="override run.repetitions")
    diag = sub.add_parser("diagnose", parents=[common], help="run the built-in self-checks")
    diag.add_argument("--flip-weight-derivative", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    log = (lambda *a, **k: None) if args.quiet else print

    # imported late so `--help` stays fast
    from . import experiments

    try:
        cfg = load_config(args.config).with_overrides(
            seed=args.seed, output_dir=args.out, workers=args.workers,
            repetitions=getattr(args, "reps", None),
        )
        out_dir = cfg.run.output_dir
        if args.command == "optimize":
            experiments.run_optimize(cfg, out_dir, log=log)
        elif args.command == "compare":
            experiments.run_compare(cfg, out_dir, log=log)
        else:
            sign = -1.0 if args.flip_weight_derivative else 1.0
            results = experiments.run_diagnose(cfg, out_dir, log=log, derivative_sign=sign)
            failed = [r for r in results if not r.passed]
            if failed:
                for r in failed:
                    print(f"diagnostic failed: {r.name} (margin {r.margin:.4g})", file=sys.stderr)
                return EXIT_DIAGNOSTIC
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        if getattr(exc, "filename", None) == args.config:
            print(f"config error: cannot read {args.config}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
