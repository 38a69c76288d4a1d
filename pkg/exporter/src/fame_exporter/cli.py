"""Command-line entry point: ``fame-export --corpus docs.jsonl --out docs.emb``."""

import argparse
import sys

from .export import DEFAULT_MODEL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fame-export",
        description=(
            "Embed a JSONL corpus ({id, text} per line) with a sentence "
            "encoder and write a FAME-EMB embedding file."
        ),
    )
    parser.add_argument("--corpus", required=True, help="input corpus, JSONL")
    parser.add_argument(
        "--model",
        default=DEFAULT_MODEL,
        help=f"encoder name or local path (default: {DEFAULT_MODEL})",
    )
    parser.add_argument(
        "--batch-size", type=int, default=32, help="documents per encoder batch"
    )
    parser.add_argument(
        "--normalize", action="store_true", help="L2-normalize embedding rows"
    )
    parser.add_argument(
        "--device", default=None, help="torch device, e.g. cpu or cuda (default: auto)"
    )
    parser.add_argument("--out", required=True, help="output FAME-EMB path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.batch_size < 1:
        print(
            f"error: --batch-size must be >= 1, got {args.batch_size}",
            file=sys.stderr,
        )
        return 2

    from .export import ExportJob, export_embeddings

    job = ExportJob(
        corpus=args.corpus,
        out=args.out,
        model=args.model,
        batch_size=args.batch_size,
        normalize=args.normalize,
        device=args.device,
    )
    try:
        count = export_embeddings(job)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # model resolution and encoder failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} embeddings to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
