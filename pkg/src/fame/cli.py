"""Command-line entry point.

Subcommands mirror the pipeline stages (ingest, features, fuse, cluster,
project, report) plus `run` for all of them in order. Thread caps are
applied through environment variables before any numerical library loads,
which is why the heavy imports happen inside main().
"""

from __future__ import annotations

import argparse
import os
import sys

_STAGE_HELP = {
    "ingest": "load the corpus, build the vocabulary and count vectors",
    "features": "compute the enabled feature blocks",
    "fuse": "standardize, concatenate, and compress the feature blocks",
    "cluster": "run K-Means, metrics, and topic descriptors",
    "project": "compute the 2-D projection CSV",
    "report": "render the per-cluster sample report",
    "run": "run every stage in order and write summary.json",
}

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMBA_NUM_THREADS",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fame",
        description="Topic-modeling and document-clustering pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _STAGE_HELP.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--seed", type=int, help="override the global seed")
        p.add_argument(
            "--threads",
            type=int,
            help="cap numerical-library threads (1 for bitwise determinism)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        for var in _THREAD_ENV_VARS:
            os.environ[var] = str(args.threads)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        return 2

    from .pipeline import load_config, run_pipeline, run_stage

    try:
        config = load_config(args.config, out_dir=args.out, seed=args.seed)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            summary = run_pipeline(config)
            print(f"wrote {len(summary.artifacts)} artifacts to {summary.out_dir}")
            if summary.metrics:
                print(f"metrics: {summary.metrics}")
        else:
            run_stage(config, args.command)
            print(f"stage {args.command!r} done: {config['out_dir']}")
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
