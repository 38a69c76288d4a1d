"""Minimal JSONL corpus reader.

The exporter only needs ordered (id, text) pairs; any other fields on a
document line (label and friends) are ignored. Parsing rules match the
consuming pipeline so both sides see the same document sequence: one JSON
object per line, blank lines skipped, ids unique.
"""

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    text: str


def read_corpus(path) -> list[CorpusEntry]:
    """Parse a JSONL corpus file, preserving document order."""
    entries: list[CorpusEntry] = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(
                    f"{path}: malformed JSON on line {lineno}: {exc.msg}"
                ) from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{path}: line {lineno} is not a JSON object")
            for field in ("id", "text"):
                if field not in obj:
                    raise ValueError(
                        f"{path}: line {lineno} is missing required "
                        f"field {field!r}"
                    )
                if not isinstance(obj[field], str):
                    raise ValueError(
                        f"{path}: line {lineno} field {field!r} must be "
                        "a string"
                    )
            if obj["id"] in seen:
                raise ValueError(
                    f"{path}: line {lineno} has duplicate id {obj['id']!r}"
                )
            seen.add(obj["id"])
            entries.append(CorpusEntry(obj["id"], obj["text"]))
    return entries
