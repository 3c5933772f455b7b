"""Command line entry point: ``megc {train,eval,compare,plots}``.

Exit codes: 0 success, 1 usage, 2 config validation, 3 runtime fault.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .agent import NumericalFault
from .config import ConfigError, ExperimentConfig, parse_config
from .harness import (POLICIES, ArtifactExistsError, emit_plots_csv, run_compare, run_eval,
                      run_training)
from .system import ValidationError

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="megc", description="MEGC resource allocation experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="config file or preset name (default: paper_defaults)")
        p.add_argument("--out", help="run directory (default: run.output_dir)")
        p.add_argument("--overwrite", action="store_true", help="replace existing artifacts")

    p = sub.add_parser("train", help="train LARA agents")
    common(p)
    p.add_argument("--seed", type=int, action="append", help="train only this seed (repeatable)")
    p.add_argument("--episodes", type=int)
    p.add_argument("--actor-lr", type=float, help="override agent.actor_lr")

    p = sub.add_parser("eval", help="evaluate one policy on the shared eval slots")
    common(p)
    p.add_argument("--policy", required=True, choices=POLICIES)
    p.add_argument("--checkpoint", help="checkpoint for --policy lara")
    p.add_argument("--seed", type=int, help="trained seed whose final checkpoint to use")

    p = sub.add_parser("compare", help="evaluate all baselines and every trained seed")
    common(p)

    p = sub.add_parser("plots", help="write figure tables and PNGs for a run directory")
    p.add_argument("--out", help="run directory")
    p.add_argument("--config", help="only used to resolve the default run directory")
    p.add_argument("--no-render", action="store_true", help="write CSV tables only")
    return parser


def _config(args) -> ExperimentConfig:
    config = parse_config(args.config)
    if getattr(args, "episodes", None) is not None:
        config = config.replace("run", episodes=args.episodes)
    if getattr(args, "actor_lr", None) is not None:
        config = config.replace("agent", actor_lr=args.actor_lr)
    return config


def run(args) -> int:
    config = _config(args)
    out = Path(args.out or config.run.output_dir)
    if args.command == "train":
        logs = run_training(config, out, seeds=args.seed, overwrite=args.overwrite)
        for seed, tlog in logs.items():
            tail = tlog.episode_return[-max(1, len(tlog.episode_return) // 10):]
            print(f"seed {seed}: {len(tlog.episode)} episodes, "
                  f"final-10% mean return {sum(tail) / len(tail):.4f}")
    elif args.command == "eval":
        if args.policy == "lara" and args.checkpoint is None and args.seed is None:
            raise UsageError("--policy lara needs --checkpoint or --seed")
        report = run_eval(config, args.policy, out, checkpoint=args.checkpoint, seed=args.seed,
                          overwrite=args.overwrite)
        _print_report(report)
    elif args.command == "compare":
        for report in run_compare(config, out, overwrite=args.overwrite).values():
            _print_report(report)
    elif args.command == "plots":
        for name, path in emit_plots_csv(out, render=not args.no_render).items():
            print(f"{name}: {path}")
    return EXIT_OK


def _print_report(report) -> None:
    print(f"{report.policy:>14}  comp {report.lat_comp:.4f}  aigc {report.lat_aigc:.4f}  "
          f"ve {report.lat_ve:.4f}  total {report.total:.4f} s")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return run(args)
    except (UsageError, ArtifactExistsError) as exc:
        print(f"megc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValidationError) as exc:
        print(f"megc: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalFault, OSError, ValueError, RuntimeError) as exc:
        print(f"megc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
