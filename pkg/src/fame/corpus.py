"""Corpus ingestion, token normalization, and vocabulary construction."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .porter import stem as porter_stem
from .stopwords import stopword_list

# letters only: digits, underscore, and punctuation all split tokens
_TOKEN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)
MIN_TOKEN_LEN = 2


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    label: str | None = None


@dataclass(frozen=True)
class PreprocessConfig:
    """Normalization switches. `stopwords` names a pinned list version."""

    stopwords: str = "english-v1"
    stem: bool = True


@dataclass
class TokenizedDocument:
    id: str
    tokens: list[str]


class Corpus:
    """Ordered document collection with unique, nonempty ids."""

    def __init__(self, documents):
        self.documents = list(documents)
        seen = set()
        for pos, doc in enumerate(self.documents):
            if not isinstance(doc.id, str) or not doc.id:
                raise ValueError(f"document at position {pos} has an empty id")
            if doc.id in seen:
                raise ValueError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
        self.label_set = sorted(
            {d.label for d in self.documents if d.label is not None}
        )

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, i):
        return self.documents[i]

    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def labels(self) -> list[str | None]:
        return [d.label for d in self.documents]


def load_corpus(path, format: str = "jsonl") -> Corpus:
    """Read a corpus file; one JSON object per line with id/text[/label]."""
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format {format!r}")
    documents = []
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
                raise ValueError(
                    f"{path}: line {lineno} is not a JSON object"
                )
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
            label = obj.get("label")
            if label is not None and not isinstance(label, str):
                raise ValueError(
                    f"{path}: line {lineno} field 'label' must be a string "
                    "or null"
                )
            documents.append(Document(obj["id"], obj["text"], label))
    try:
        return Corpus(documents)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            rec = {"id": doc.id, "text": doc.text}
            if doc.label is not None:
                rec["label"] = doc.label
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def preprocess_text(text: str, config: PreprocessConfig) -> list[str]:
    """Lowercase, split on non-letters, drop short tokens and stopwords,
    then stem.

    Tokens keep corpus order; the result is deterministic in `text` and
    `config` alone.
    """
    stops = stopword_list(config.stopwords)
    out = []
    for token in _TOKEN_RE.findall(text.lower()):
        if len(token) < MIN_TOKEN_LEN or not token.isalpha():
            continue
        if token in stops:
            continue
        out.append(porter_stem(token) if config.stem else token)
    return out


def tokenize_corpus(corpus: Corpus, config: PreprocessConfig) -> list[TokenizedDocument]:
    return [
        TokenizedDocument(doc.id, preprocess_text(doc.text, config))
        for doc in corpus
    ]


@dataclass
class Vocabulary:
    """Lexicographically ordered term index fitted on one corpus."""

    terms: list[str]
    index: dict[str, int]
    doc_freq: dict[str, int]
    n_docs_fitted: int

    def __len__(self):
        return len(self.terms)

    @classmethod
    def from_terms(cls, terms, doc_freq, n_docs_fitted):
        terms = sorted(terms)
        return cls(
            terms=terms,
            index={t: i for i, t in enumerate(terms)},
            doc_freq={t: int(doc_freq[t]) for t in terms},
            n_docs_fitted=int(n_docs_fitted),
        )


def build_vocabulary_from_tokens(
    tokenized: list[TokenizedDocument],
    n_docs: int,
    min_df: int = 5,
    max_df_ratio: float = 0.5,
    max_size: int = 20000,
) -> Vocabulary:
    if n_docs == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    if not 0.0 < max_df_ratio <= 1.0:
        raise ValueError(f"max_df_ratio must be in (0, 1], got {max_df_ratio}")
    if max_size < 1:
        raise ValueError(f"max_size must be >= 1, got {max_size}")
    df: dict[str, int] = {}
    for tdoc in tokenized:
        for term in set(tdoc.tokens):
            df[term] = df.get(term, 0) + 1
    kept = [
        t for t, f in df.items()
        if f >= min_df and f / n_docs <= max_df_ratio
    ]
    if not kept:
        raise ValueError(
            "vocabulary is empty after pruning "
            f"(min_df={min_df}, max_df_ratio={max_df_ratio})"
        )
    if len(kept) > max_size:
        # highest document frequency survives; ties keep the
        # lexicographically smaller term
        kept.sort(key=lambda t: (-df[t], t))
        kept = kept[:max_size]
    return Vocabulary.from_terms(kept, df, n_docs)


def build_vocabulary(
    corpus: Corpus,
    config: PreprocessConfig,
    min_df: int = 5,
    max_df_ratio: float = 0.5,
    max_size: int = 20000,
) -> Vocabulary:
    """Fit the pruned term index over the preprocessed corpus."""
    if len(corpus) == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    return build_vocabulary_from_tokens(
        tokenize_corpus(corpus, config),
        n_docs=len(corpus),
        min_df=min_df,
        max_df_ratio=max_df_ratio,
        max_size=max_size,
    )


def count_vectorize_tokens(
    tokenized: list[TokenizedDocument], vocab: Vocabulary
) -> sparse.csr_matrix:
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    rows: list[int] = []
    cols: list[int] = []
    vals: list[int] = []
    index = vocab.index
    for row, tdoc in enumerate(tokenized):
        counts: dict[int, int] = {}
        for token in tdoc.tokens:
            col = index.get(token)
            if col is not None:
                counts[col] = counts.get(col, 0) + 1
        for col in sorted(counts):
            rows.append(row)
            cols.append(col)
            vals.append(counts[col])
    mat = sparse.csr_matrix(
        (
            np.asarray(vals, dtype=np.int64),
            (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)),
        ),
        shape=(len(tokenized), len(vocab)),
    )
    mat.sort_indices()
    return mat


def count_vectorize(
    corpus: Corpus, vocab: Vocabulary, config: PreprocessConfig
) -> sparse.csr_matrix:
    """Rows follow corpus order; out-of-vocabulary tokens are dropped."""
    return count_vectorize_tokens(tokenize_corpus(corpus, config), vocab)
