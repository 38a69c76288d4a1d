"""Config-driven orchestration: stages, artifacts, and reports.

Every stage reads its inputs from the artifacts of earlier stages and
persists its own, so a full run and a stage-by-stage run produce identical
bytes. Stage seeds derive from the global seed by fixed offsets: LDA +1,
autoencoder init +2, autoencoder shuffle +3, K-Means +4, projection and
its subsample +5, report sampling +6, NMF +7, holdout split +8.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import cluster as _cluster
from . import fusion as _fusion
from .blocks import FeatureBlock
from .corpus import (
    PreprocessConfig,
    TokenizedDocument,
    build_vocabulary_from_tokens,
    count_vectorize_tokens,
    load_corpus,
    preprocess_text,
    Vocabulary,
)
from .embeddings import align_embeddings, read_embeddings
from .features import fit_nmf, fit_tfidf, transform_tfidf
from .lda import fit_lda_gibbs, infer_theta
from .matrixio import read_matrix, write_matrix
from .projection import emit_projection, pca_project, tsne_project
from .topics import cluster_top_terms

SEED_OFFSETS = {
    "lda": 1,
    "ae_init": 2,
    "ae_shuffle": 3,
    "kmeans": 4,
    "projection": 5,
    "report": 6,
    "nmf": 7,
    "split": 8,
}

BLOCK_ORDER = ("tfidf", "nmf", "lda", "embeddings")

STAGES = ("ingest", "features", "fuse", "cluster", "project", "report")


class PipelineStageError(RuntimeError):
    """A stage failed; carries the stage name and propagates the cause."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


@dataclass
class RunSummary:
    config_hash: str
    out_dir: str
    n_docs: int
    metrics: dict
    timings: dict
    artifacts: list


DEFAULTS = {
    "seed": 0,
    "preprocess": {
        "stopwords": "english-v1",
        "stem": True,
        "min_df": 5,
        "max_df_ratio": 0.5,
        "max_size": 20000,
    },
    "fusion": {
        "enabled": "auto",
        "modes": "zscore",
        "hidden": 512,
        "latent": 64,
        "activation": "relu",
        "learning_rate": 1e-3,
        "epochs": 50,
        "batch_size": 256,
        "optimizer": "adam",
    },
    "cluster": {"k": 20, "restarts": 10, "max_iter": 300, "tol": 1e-6},
    "topics": {"n_terms": 10},
    "projection": {
        "method": "tsne",
        "perplexity": 30.0,
        "iters": 1000,
        "sample": 2000,
    },
    "report": {"samples_per_cluster": 3, "max_chars": 240},
    "eval_split": None,
}

BLOCK_DEFAULTS = {
    "tfidf": {"normalize": True},
    "nmf": {"rank": 64, "iters": 200, "tol": None},
    "lda": {
        "k_values": [20],
        "block_k": None,
        "alpha": None,
        "beta": 0.01,
        "iters": 1000,
        "collect_theta_after": None,
        "engine": "auto",
        "fold_in_burn_in": 50,
        "fold_in_samples": 5,
    },
    "embeddings": {"path": None, "normalize": False},
}

_NORM_MODE = {"enum": ["zscore", "l2", "none"]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["corpus", "out_dir", "blocks"],
    "properties": {
        "corpus": {"type": "string", "minLength": 1},
        "out_dir": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "preprocess": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "stopwords": {"enum": ["english-v1", "none"]},
                "stem": {"type": "boolean"},
                "min_df": {"type": "integer", "minimum": 1},
                "max_df_ratio": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "maximum": 1,
                },
                "max_size": {"type": "integer", "minimum": 1},
            },
        },
        "blocks": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "properties": {
                "tfidf": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"normalize": {"type": "boolean"}},
                },
                "nmf": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "rank": {"type": "integer", "minimum": 1},
                        "iters": {"type": "integer", "minimum": 1},
                        "tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
                    },
                },
                "lda": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "k_values": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 1},
                            "minItems": 1,
                            "uniqueItems": True,
                        },
                        "block_k": {"type": ["integer", "null"], "minimum": 1},
                        "alpha": {"type": ["number", "null"], "exclusiveMinimum": 0},
                        "beta": {"type": "number", "exclusiveMinimum": 0},
                        "iters": {"type": "integer", "minimum": 0},
                        "collect_theta_after": {
                            "type": ["integer", "null"],
                            "minimum": 0,
                        },
                        "engine": {"enum": ["auto", "python", "numba"]},
                        "fold_in_burn_in": {"type": "integer", "minimum": 0},
                        "fold_in_samples": {"type": "integer", "minimum": 1},
                    },
                },
                "embeddings": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["path"],
                    "properties": {
                        "path": {"type": "string", "minLength": 1},
                        "normalize": {"type": "boolean"},
                    },
                },
            },
        },
        "fusion": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"enum": [True, False, "auto"]},
                "modes": {
                    "oneOf": [
                        _NORM_MODE,
                        {"type": "object", "additionalProperties": _NORM_MODE},
                    ]
                },
                "hidden": {"type": ["integer", "null"], "minimum": 1},
                "latent": {"type": "integer", "minimum": 1},
                "activation": {"enum": ["relu", "identity"]},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "epochs": {"type": "integer", "minimum": 0},
                "batch_size": {"type": "integer", "minimum": 1},
                "optimizer": {"enum": ["adam", "sgd"]},
            },
        },
        "cluster": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "restarts": {"type": "integer", "minimum": 1},
                "max_iter": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "minimum": 0},
            },
        },
        "topics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_terms": {"type": "integer", "minimum": 1}},
        },
        "projection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["pca", "tsne"]},
                "perplexity": {"type": "number", "exclusiveMinimum": 0},
                "iters": {"type": "integer", "minimum": 1},
                "sample": {"type": ["integer", "null"], "minimum": 4},
            },
        },
        "report": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples_per_cluster": {"type": "integer", "minimum": 1},
                "max_chars": {"type": "integer", "minimum": 10},
            },
        },
        "eval_split": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["holdout_ratio"],
                    "properties": {
                        "holdout_ratio": {
                            "type": "number",
                            "exclusiveMinimum": 0,
                            "exclusiveMaximum": 1,
                        }
                    },
                },
            ]
        },
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value
    return base


def validate_config(raw: dict) -> dict:
    """Fill defaults, schema-validate, and run cross-field checks.

    Returns the completed config. Error messages carry JSON paths.
    """
    import jsonschema

    if not isinstance(raw, dict):
        raise ValueError(f"config must be a JSON object, got {type(raw).__name__}")
    config = copy.deepcopy(DEFAULTS)
    config = _deep_merge(config, copy.deepcopy(raw))
    blocks = config.get("blocks")
    if isinstance(blocks, dict):
        for name, params in list(blocks.items()):
            if name in BLOCK_DEFAULTS and isinstance(params, dict):
                merged = copy.deepcopy(BLOCK_DEFAULTS[name])
                blocks[name] = _deep_merge(merged, params)
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: e.json_path)
    if errors:
        detail = "\n".join(f"  {e.json_path}: {e.message}" for e in errors)
        raise ValueError(f"invalid config:\n{detail}")

    blocks = config["blocks"]
    if "lda" in blocks:
        lda = blocks["lda"]
        if lda["block_k"] is None:
            lda["block_k"] = lda["k_values"][0]
        if lda["block_k"] not in lda["k_values"]:
            raise ValueError(
                f"invalid config:\n  $.blocks.lda.block_k: {lda['block_k']} "
                f"not in k_values {lda['k_values']}"
            )
        cta = lda["collect_theta_after"]
        if cta is not None and cta >= lda["iters"]:
            raise ValueError(
                "invalid config:\n  $.blocks.lda.collect_theta_after: must "
                f"be < iters ({lda['iters']}), got {cta}"
            )
    if config["eval_split"] is not None and "nmf" in blocks:
        raise ValueError(
            "invalid config:\n  $.eval_split: incompatible with the nmf "
            "block (its factors cannot be computed for held-out documents)"
        )
    return config


def load_config(path, out_dir=None, seed=None) -> dict:
    """Read a JSON config file, apply CLI overrides, and validate."""
    with open(path, encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    if out_dir is not None:
        raw["out_dir"] = str(out_dir)
    if seed is not None:
        if seed < 0:
            raise ValueError(f"seed must be >= 0, got {seed}")
        raw["seed"] = int(seed)
    return validate_config(raw)


def config_hash(config: dict) -> str:
    """sha256 of the completed config minus the output location."""
    trimmed = {k: v for k, v in config.items() if k != "out_dir"}
    blob = json.dumps(trimmed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# artifact helpers

def _out(config) -> Path:
    return Path(config["out_dir"])


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _read_json(path: Path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(
            f"missing artifact {path.name}; run the {produced_by!r} stage first"
        )
    return path


def _preprocess_config(config) -> PreprocessConfig:
    pp = config["preprocess"]
    return PreprocessConfig(stopwords=pp["stopwords"], stem=pp["stem"])


def _load_corpus(config):
    return load_corpus(config["corpus"])


def _split_rows(config, n_docs: int):
    """(train_rows, holdout_rows) as sorted index arrays; holdout empty
    when no eval split is configured."""
    if config["eval_split"] is None:
        return np.arange(n_docs), np.array([], dtype=np.int64)
    ratio = config["eval_split"]["holdout_ratio"]
    n_hold = int(round(n_docs * ratio))
    n_hold = min(max(n_hold, 1), n_docs - 1)
    rng = np.random.default_rng(config["seed"] + SEED_OFFSETS["split"])
    perm = rng.permutation(n_docs)
    holdout = np.sort(perm[:n_hold])
    train = np.sort(perm[n_hold:])
    return train, holdout


def counts_to_token_lists(counts) -> list[np.ndarray]:
    """Expand count rows into token-id lists (ascending id, repeated by
    count). The collapsed Gibbs model is exchangeable over token order, so
    this canonical order is as valid as the original one and reproducible
    from the persisted counts alone."""
    counts = sp.csr_matrix(counts)
    counts.sort_indices()
    docs = []
    for d in range(counts.shape[0]):
        lo, hi = counts.indptr[d], counts.indptr[d + 1]
        docs.append(
            np.repeat(
                counts.indices[lo:hi], counts.data[lo:hi]
            ).astype(np.int32)
        )
    return docs


# ---------------------------------------------------------------------------
# stages

def stage_ingest(config) -> None:
    """Load the corpus, build the vocabulary, and persist count vectors.

    With an eval split, the vocabulary is fitted on training rows only;
    counts still cover every document.
    """
    out = _out(config)
    corpus = _load_corpus(config)
    if len(corpus) == 0:
        raise ValueError(f"{config['corpus']}: corpus is empty")
    pp = config["preprocess"]
    pconfig = _preprocess_config(config)
    tokenized = [
        TokenizedDocument(doc.id, preprocess_text(doc.text, pconfig))
        for doc in corpus
    ]
    train, holdout = _split_rows(config, len(corpus))
    vocab = build_vocabulary_from_tokens(
        [tokenized[i] for i in train],
        n_docs=len(train),
        min_df=pp["min_df"],
        max_df_ratio=pp["max_df_ratio"],
        max_size=pp["max_size"],
    )
    counts = count_vectorize_tokens(tokenized, vocab)
    write_matrix(counts, out / "counts.mat")
    _write_json(out / "vocab.json", {
        "terms": vocab.terms,
        "doc_freq": [vocab.doc_freq[t] for t in vocab.terms],
        "n_docs_fitted": vocab.n_docs_fitted,
    })
    _write_json(out / "corpus_meta.json", {
        "corpus_path": config["corpus"],
        "n_docs": len(corpus),
        "label_set": corpus.label_set,
        "n_labeled": sum(1 for d in corpus if d.label is not None),
        "holdout_rows": [int(i) for i in holdout],
    })


def _load_vocab(out: Path) -> Vocabulary:
    data = _read_json(_require(out / "vocab.json", "ingest"))
    return Vocabulary.from_terms(
        data["terms"],
        dict(zip(data["terms"], data["doc_freq"])),
        data["n_docs_fitted"],
    )


def _load_counts(out: Path):
    counts = read_matrix(_require(out / "counts.mat", "ingest"))
    return counts.astype(np.int64)


def _load_meta(out: Path) -> dict:
    return _read_json(_require(out / "corpus_meta.json", "ingest"))


def _train_rows(meta) -> tuple[np.ndarray, np.ndarray]:
    holdout = np.asarray(meta["holdout_rows"], dtype=np.int64)
    mask = np.ones(meta["n_docs"], dtype=bool)
    mask[holdout] = False
    return np.flatnonzero(mask), holdout


def stage_features(config) -> None:
    """Compute every enabled feature block and persist it."""
    out = _out(config)
    seed = config["seed"]
    blocks = config["blocks"]
    meta = _load_meta(out)
    counts = _load_counts(out)
    train, holdout = _train_rows(meta)

    if "tfidf" in blocks:
        model = fit_tfidf(
            counts[train], normalize=blocks["tfidf"]["normalize"]
        )
        block = transform_tfidf(model, counts)
        write_matrix(block.matrix, out / "block_tfidf.mat")
        _write_json(out / "tfidf.json", {
            "idf": [float(v) for v in model.idf],
            "n_docs_fitted": model.n_docs_fitted,
            "normalize": model.normalize,
        })
    if "nmf" in blocks:
        # factorizes the L2-normalized tf-idf matrix; no holdout transform
        params = blocks["nmf"]
        X = transform_tfidf(fit_tfidf(counts[train]), counts).matrix
        model = fit_nmf(
            X,
            rank=params["rank"],
            iters=params["iters"],
            seed=seed + SEED_OFFSETS["nmf"],
            tol=params["tol"],
        )
        write_matrix(model.W, out / "block_nmf.mat")
        write_matrix(model.H, out / "nmf_h.mat")
        _write_json(out / "nmf.json", {
            "rank": model.rank,
            "seed": model.seed,
            "loss_history": [float(v) for v in model.loss_history],
        })
    if "lda" in blocks:
        params = blocks["lda"]
        lda_seed = seed + SEED_OFFSETS["lda"]
        docs = counts_to_token_lists(counts)
        train_docs = [docs[i] for i in train]
        vocab_size = counts.shape[1]
        for k in params["k_values"]:
            model = fit_lda_gibbs(
                train_docs,
                n_topics=k,
                vocab_size=vocab_size,
                alpha=params["alpha"],
                beta=params["beta"],
                iters=params["iters"],
                seed=lda_seed,
                collect_theta_after=params["collect_theta_after"],
                engine=params["engine"],
            )
            write_matrix(
                model.n_kw.astype(np.uint32), out / f"lda_k{k}_nkw.mat"
            )
            write_matrix(
                model.n_dk.astype(np.uint32), out / f"lda_k{k}_ndk.mat"
            )
            _write_json(out / f"lda_k{k}.json", {
                "k": model.n_topics,
                "alpha": model.alpha,
                "beta": model.beta,
                "vocab_size": model.vocab_size,
                "seed": model.seed,
                "iters_run": model.iters_run,
            })
            if k == params["block_k"]:
                theta = np.empty((len(docs), k), dtype=np.float64)
                theta[train] = infer_theta(model)
                if holdout.size:
                    theta[holdout] = infer_theta(
                        model,
                        docs=[docs[i] for i in holdout],
                        burn_in=params["fold_in_burn_in"],
                        samples=params["fold_in_samples"],
                        seed=lda_seed,
                    )
                write_matrix(theta, out / "block_lda.mat")
    if "embeddings" in blocks:
        params = blocks["embeddings"]
        corpus = _load_corpus(config)
        emb = read_embeddings(params["path"])
        block = align_embeddings(emb, corpus, normalize=params["normalize"])
        write_matrix(block.matrix, out / "block_embeddings.mat")
        _write_json(out / "embeddings.json", {
            "path": params["path"],
            "model_tag": emb.model_tag,
            "normalize": params["normalize"],
            "dim": emb.dim,
        })


def _load_blocks(config, out: Path) -> list[FeatureBlock]:
    blocks = []
    for name in BLOCK_ORDER:
        if name not in config["blocks"]:
            continue
        mat = read_matrix(_require(out / f"block_{name}.mat", "features"))
        blocks.append(FeatureBlock(name, mat))
    return blocks


def stage_fuse(config) -> None:
    """Produce the representation the clustering consumes.

    One block with fusion on auto passes straight through. Otherwise the
    blocks are standardized and concatenated, and unless fusion is
    disabled an autoencoder compresses the result; its float32 latent is
    what later stages see.
    """
    out = _out(config)
    fus = config["fusion"]
    blocks = _load_blocks(config, out)
    meta = _load_meta(out)
    train, _ = _train_rows(meta)

    enabled = fus["enabled"]
    if enabled == "auto":
        enabled = len(blocks) > 1
    if not enabled and len(blocks) == 1:
        block = blocks[0]
        write_matrix(block.matrix, out / "latent.mat")
        _write_json(out / "fusion.json", {
            "mode": "passthrough",
            "block": block.name,
            "width": block.width,
        })
        return

    modes = fus["modes"]
    train_blocks = [
        FeatureBlock(b.name, b.matrix[np.asarray(train)]) for b in blocks
    ]
    fused_train = _fusion.assemble_features(train_blocks, modes)
    full = _fusion.apply_block_stats(blocks, fused_train.block_layout)
    layout_json = [
        {
            "name": s.name,
            "width": s.width,
            "mode": s.mode,
            "mean": None if s.mean is None else [float(v) for v in s.mean],
            "std": None if s.std is None else [float(v) for v in s.std],
        }
        for s in fused_train.block_layout
    ]
    if not enabled:
        write_matrix(full, out / "latent.mat")
        _write_json(out / "fusion.json", {
            "mode": "concat",
            "layout": layout_json,
            "width": full.shape[1],
        })
        return

    D = full.shape[1]
    latent_width = fus["latent"]
    if latent_width >= D:
        raise ValueError(
            f"fusion latent width {latent_width} must be smaller than the "
            f"assembled width {D}"
        )
    if fus["hidden"] is None:
        dims = [D, latent_width, D]
    else:
        dims = [D, fus["hidden"], latent_width, fus["hidden"], D]
    seed = config["seed"]
    model = _fusion.init_autoencoder(
        dims, seed=seed + SEED_OFFSETS["ae_init"], activation=fus["activation"]
    )
    train_cfg = _fusion.TrainConfig(
        learning_rate=fus["learning_rate"],
        epochs=fus["epochs"],
        batch_size=fus["batch_size"],
        seed=seed + SEED_OFFSETS["ae_shuffle"],
        optimizer=fus["optimizer"],
    )
    trained, history = _fusion.train_autoencoder(
        model, full[np.asarray(train)], train_cfg
    )
    latent = _fusion.encode(trained, full).matrix.astype(np.float32)
    write_matrix(latent, out / "latent.mat")
    for i, (w, b) in enumerate(zip(trained.weights, trained.biases)):
        write_matrix(w, out / f"ae_w{i}.mat")
        write_matrix(b.reshape(1, -1), out / f"ae_b{i}.mat")
    _write_json(out / "fusion.json", {
        "mode": "autoencoder",
        "layout": layout_json,
        "dims": dims,
        "activation": fus["activation"],
        "optimizer": fus["optimizer"],
        "learning_rate": fus["learning_rate"],
        "epochs": fus["epochs"],
        "batch_size": fus["batch_size"],
        "init_seed": seed + SEED_OFFSETS["ae_init"],
        "shuffle_seed": seed + SEED_OFFSETS["ae_shuffle"],
        "loss_history": [float(v) for v in history],
    })


def _load_latent(out: Path):
    return read_matrix(_require(out / "latent.mat", "fuse"))


def stage_cluster(config) -> None:
    """K-Means on the fused representation, metrics, topic descriptors."""
    out = _out(config)
    cl = config["cluster"]
    latent = _load_latent(out)
    meta = _load_meta(out)
    train, holdout = _train_rows(meta)
    latent_dense = _cluster._as_dense(latent)

    result = _cluster.kmeans_fit(
        latent_dense[train],
        k=cl["k"],
        restarts=cl["restarts"],
        max_iter=cl["max_iter"],
        tol=cl["tol"],
        seed=config["seed"] + SEED_OFFSETS["kmeans"],
    )
    assignments = np.empty(meta["n_docs"], dtype=np.int64)
    assignments[train] = result.assignments
    if holdout.size:
        assignments[holdout] = _cluster.kmeans_predict(
            result.model, latent_dense[holdout]
        )

    corpus = _load_corpus(config)
    labels = corpus.labels()
    metrics = {}

    def _subset_metrics(rows):
        rows = [int(i) for i in rows if labels[int(i)] is not None]
        if len(rows) < 2:
            return None
        return _cluster.evaluate(
            [int(assignments[i]) for i in rows], [labels[i] for i in rows]
        )

    if holdout.size:
        metrics["train"] = _subset_metrics(train)
        metrics["holdout"] = _subset_metrics(holdout)
    else:
        metrics["all"] = _subset_metrics(train)

    write_matrix(
        assignments.astype(np.uint32).reshape(-1, 1), out / "assignments.mat"
    )
    write_matrix(result.model.centroids, out / "centroids.mat")
    _write_json(out / "kmeans.json", {
        "k": cl["k"],
        "restarts": cl["restarts"],
        "max_iter": cl["max_iter"],
        "tol": cl["tol"],
        "seed": result.model.seed,
        "inertia": result.model.inertia,
        "n_iter": result.model.n_iter,
        "inertia_history": [float(v) for v in result.model.inertia_history],
    })
    _write_json(out / "metrics.json", metrics)

    vocab = _load_vocab(out)
    counts = _load_counts(out)
    topics = cluster_top_terms(
        counts, assignments, vocab, config["topics"]["n_terms"],
        n_clusters=cl["k"],
    )
    _write_json(out / "topics.json", {
        "n_terms": topics.n_terms,
        "clusters": [
            {"terms": t, "scores": s}
            for t, s in zip(topics.terms, topics.scores)
        ],
    })


def _stratified_sample(assignments, sample_size, rng) -> np.ndarray:
    """Proportional per-cluster subsample, at least one document from each
    nonempty cluster, rows returned in corpus order."""
    n = len(assignments)
    if sample_size >= n:
        return np.arange(n)
    ids, counts = np.unique(assignments, return_counts=True)
    shares = counts * (sample_size / n)
    base = np.maximum(np.floor(shares).astype(np.int64), 1)
    base = np.minimum(base, counts)
    # distribute the remainder by largest fractional share
    rest = sample_size - base.sum()
    if rest > 0:
        frac = shares - np.floor(shares)
        room = counts - base
        order = np.argsort(-frac, kind="stable")
        for idx in order:
            if rest == 0:
                break
            take = int(min(room[idx], rest))
            if take > 0:
                base[idx] += take
                rest -= take
    elif rest < 0:
        # floors+minimums overshot: trim from the largest clusters
        order = np.argsort(-base, kind="stable")
        for idx in order:
            if rest == 0:
                break
            give = int(min(base[idx] - 1, -rest))
            if give > 0:
                base[idx] -= give
                rest += give
    chosen = []
    for cid, take in zip(ids, base):
        members = np.flatnonzero(assignments == cid)
        if take >= members.size:
            chosen.append(members)
        else:
            chosen.append(rng.choice(members, size=int(take), replace=False))
    return np.sort(np.concatenate(chosen))


def stage_project(config) -> None:
    """2-D projection of the fused representation, emitted as CSV."""
    out = _out(config)
    pr = config["projection"]
    latent = _cluster._as_dense(_load_latent(out))
    assignments = np.asarray(
        read_matrix(_require(out / "assignments.mat", "cluster"))
    ).ravel().astype(np.int64)
    corpus = _load_corpus(config)
    seed = config["seed"] + SEED_OFFSETS["projection"]

    n = latent.shape[0]
    rows = np.arange(n)
    if pr["sample"] is not None and pr["sample"] < n:
        rng = np.random.default_rng(seed)
        rows = _stratified_sample(assignments, pr["sample"], rng)
    sub = latent[rows]
    if pr["method"] == "tsne":
        proj = tsne_project(
            sub, perplexity=pr["perplexity"], iters=pr["iters"], seed=seed
        )
    else:
        proj = pca_project(sub, out_dims=2)
    ids = corpus.ids()
    labels = corpus.labels()
    emit_projection(
        proj,
        [ids[i] for i in rows],
        assignments[rows],
        [labels[i] for i in rows],
        out / "projection.csv",
    )
    _write_json(out / "projection.json", {
        "method": proj.method,
        "params": proj.params,
        "kl_history": [[int(i), float(v)] for i, v in proj.kl_history],
        "doc_ids": [ids[i] for i in rows],
    })


def emit_cluster_report(
    corpus,
    assignments,
    topics,
    samples_per_cluster: int,
    seed: int,
    path,
    max_chars: int = 240,
) -> None:
    """Markdown report: per cluster its size, top terms, and seeded sample
    documents shown with their gold labels. Deterministic given seed."""
    assignments = np.asarray(assignments, dtype=np.int64)
    if len(corpus) != assignments.shape[0]:
        raise ValueError(
            f"{assignments.shape[0]} assignments for {len(corpus)} documents"
        )
    if samples_per_cluster < 1:
        raise ValueError(
            f"samples_per_cluster must be >= 1, got {samples_per_cluster}"
        )
    n_clusters = len(topics.terms)
    if assignments.size and int(assignments.max()) >= n_clusters:
        raise ValueError(
            f"assignment id {int(assignments.max())} out of range for "
            f"{n_clusters} clusters"
        )
    rng = np.random.default_rng(seed)
    lines = ["# Cluster report", ""]
    lines.append(f"- documents: {len(corpus)}")
    lines.append(f"- clusters: {n_clusters}")
    lines.append("")
    for c in range(n_clusters):
        members = np.flatnonzero(assignments == c)
        lines.append(f"## Cluster {c} ({members.size} documents)")
        lines.append("")
        if topics.terms[c]:
            lines.append("top terms: " + ", ".join(topics.terms[c]))
            lines.append("")
        if members.size == 0:
            continue
        if members.size <= samples_per_cluster:
            picked = members
        else:
            picked = np.sort(rng.choice(
                members, size=samples_per_cluster, replace=False
            ))
        for i in picked:
            doc = corpus[int(i)]
            text = " ".join(doc.text.split())
            if len(text) > max_chars:
                text = text[:max_chars].rstrip() + "..."
            label = doc.label if doc.label is not None else "(unlabeled)"
            lines.append(f"- {text} - target: {label}")
        lines.append("")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines))


def stage_report(config) -> None:
    """Render the per-cluster sample report."""
    out = _out(config)
    corpus = _load_corpus(config)
    assignments = np.asarray(
        read_matrix(_require(out / "assignments.mat", "cluster"))
    ).ravel().astype(np.int64)
    topics_data = _read_json(_require(out / "topics.json", "cluster"))
    from .topics import ClusterTopics

    topics = ClusterTopics(
        terms=[c["terms"] for c in topics_data["clusters"]],
        scores=[c["scores"] for c in topics_data["clusters"]],
        n_terms=topics_data["n_terms"],
    )
    emit_cluster_report(
        corpus,
        assignments,
        topics,
        samples_per_cluster=config["report"]["samples_per_cluster"],
        seed=config["seed"] + SEED_OFFSETS["report"],
        path=out / "report.md",
        max_chars=config["report"]["max_chars"],
    )


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "features": stage_features,
    "fuse": stage_fuse,
    "cluster": stage_cluster,
    "project": stage_project,
    "report": stage_report,
}


def run_stage(config, stage: str) -> None:
    """Execute one stage with a partial-output marker around it."""
    if stage not in _STAGE_FUNCS:
        raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")
    out = _out(config)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / f"{stage}.partial"
    marker.touch()
    try:
        _STAGE_FUNCS[stage](config)
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(stage, str(exc)) from exc
    marker.unlink()


def run_pipeline(config) -> RunSummary:
    """All stages in order; writes summary.json next to the artifacts."""
    out = _out(config)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    for stage in STAGES:
        started = time.perf_counter()
        run_stage(config, stage)
        timings[stage] = time.perf_counter() - started
    metrics = _read_json(out / "metrics.json")
    meta = _load_meta(out)
    artifacts = sorted(
        p.name for p in out.iterdir()
        if p.is_file() and p.name != "summary.json"
    )
    summary = RunSummary(
        config_hash=config_hash(config),
        out_dir=str(out),
        n_docs=meta["n_docs"],
        metrics=metrics,
        timings=timings,
        artifacts=artifacts,
    )
    _write_json(out / "summary.json", {
        "config_hash": summary.config_hash,
        "n_docs": summary.n_docs,
        "metrics": summary.metrics,
        "timings": summary.timings,
        "artifacts": summary.artifacts,
    })
    return summary
