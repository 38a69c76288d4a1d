#!/usr/bin/env python3
"""Convert the 20 Newsgroups collection to the pipeline's JSONL format.

Downloads via scikit-learn (train + test splits, 18846 documents) and
writes one {"id", "text", "label"} object per line. The output can be fed
straight to `fame run --config ...` or exported through FAME_20NG_JSONL so
the full-scale acceptance tests use the real dataset.

Usage:
    python scripts/fetch_20newsgroups.py --out 20news.jsonl
"""

import argparse
import json
import sys


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument(
        "--strip-metadata",
        action="store_true",
        help="remove headers, footers, and quoted replies",
    )
    args = parser.parse_args()

    try:
        from sklearn.datasets import fetch_20newsgroups
    except ImportError:
        print(
            "error: scikit-learn is required for the download "
            "(pip install scikit-learn)",
            file=sys.stderr,
        )
        return 1

    remove = ("headers", "footers", "quotes") if args.strip_metadata else ()
    bundle = fetch_20newsgroups(subset="all", remove=remove)
    names = bundle.target_names
    with open(args.out, "w", encoding="utf-8") as f:
        for i, (text, target) in enumerate(zip(bundle.data, bundle.target)):
            f.write(json.dumps({
                "id": f"20news-{i:05d}",
                "text": text,
                "label": names[target],
            }) + "\n")
    print(f"wrote {len(bundle.data)} documents to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
