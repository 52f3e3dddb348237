"""Command-line entry point.

    bridgeflow <check|bridge|train|rollout|eval> --config <path>
               [--out <dir>] [--seed <u64>] [--threads <k>]

The thread count (flag or BRIDGEFLOW_THREADS) is exported to the BLAS
thread-count variables before numpy loads; use 1 for byte-reproducible
outputs. Numpy-heavy modules are imported lazily for that reason.
"""

from __future__ import annotations

import argparse
import os
import sys

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


def _apply_threads(threads: int | None) -> None:
    if threads is None:
        env = os.environ.get("BRIDGEFLOW_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        if threads < 1:
            raise SystemExit("--threads must be >= 1")
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgeflow",
        description="Steer an initial distribution to a target through a linear control system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("check", "controllability report for the configured system"),
        ("bridge", "single-pair bridge trajectories"),
        ("train", "fit the learned steering law"),
        ("rollout", "simulate prediction paths under the configured law"),
        ("eval", "MMD/W2 metric curves and density grids from rollout artifacts"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None, help="BLAS thread count (default: env)")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    _apply_threads(args.threads)

    from . import commands
    from .artifacts import MissingArtifactError
    from .config import ConfigError, load_config
    from .systems import UncontrollableSystemError

    try:
        config = load_config(args.config, seed_override=args.seed, out_override=args.out)
        if args.command == "check":
            return commands.cmd_check(config, args.out)
        handler = {
            "bridge": commands.cmd_bridge,
            "train": commands.cmd_train,
            "rollout": commands.cmd_rollout,
            "eval": commands.cmd_eval,
        }[args.command]
        manifest = handler(config, args.out)
        print(f"wrote {manifest}")
        return 0
    except (ConfigError, MissingArtifactError, UncontrollableSystemError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
