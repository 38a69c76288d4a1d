"""Latent Dirichlet allocation via collapsed Gibbs sampling.

One sequential chain: every sweep resamples each token from the collapsed
conditional with that token removed from the counts. Each document owns an
independent generator stream keyed by (seed, doc position), so the random
numbers a document consumes do not depend on how other documents' tokens
were batched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# scalar kernel is JIT-compiled only past this much work; below it, plain
# Python is faster than paying the compile
_JIT_WORK_THRESHOLD = 5e7

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None
    _HAVE_NUMBA = False


@dataclass
class LdaModel:
    n_topics: int
    alpha: float
    beta: float
    vocab_size: int
    n_kw: np.ndarray  # (K, V) topic-term counts
    n_k: np.ndarray  # (K,) topic totals
    n_dk: np.ndarray  # (D, K) document-topic counts
    doc_lengths: np.ndarray  # (D,)
    assignments: list[np.ndarray]
    seed: int = 0
    iters_run: int = 0
    theta_mean: np.ndarray | None = None


def _sweep(token_w, doc_offsets, z, uniforms, n_kw, n_k, n_dk, alpha, beta):
    n_docs = doc_offsets.shape[0] - 1
    n_topics = n_kw.shape[0]
    vbeta = beta * n_kw.shape[1]
    for d in range(n_docs):
        for pos in range(doc_offsets[d], doc_offsets[d + 1]):
            w = token_w[pos]
            old = z[pos]
            n_kw[old, w] -= 1
            n_k[old] -= 1
            n_dk[d, old] -= 1
            total = 0.0
            for k in range(n_topics):
                total += (
                    (n_dk[d, k] + alpha)
                    * (n_kw[k, w] + beta)
                    / (n_k[k] + vbeta)
                )
            target = uniforms[pos] * total
            acc = 0.0
            new = n_topics - 1
            for k in range(n_topics):
                acc += (
                    (n_dk[d, k] + alpha)
                    * (n_kw[k, w] + beta)
                    / (n_k[k] + vbeta)
                )
                if target < acc:
                    new = k
                    break
            z[pos] = new
            n_kw[new, w] += 1
            n_k[new] += 1
            n_dk[d, new] += 1


_sweep_jit = None


def _get_sweep(engine: str, work: float):
    global _sweep_jit
    use_jit = _HAVE_NUMBA and (
        engine == "numba" or (engine == "auto" and work > _JIT_WORK_THRESHOLD)
    )
    if engine == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("engine='numba' requested but numba is not installed")
    if not use_jit:
        return _sweep
    if _sweep_jit is None:
        _sweep_jit = numba.njit(cache=True)(_sweep)
    return _sweep_jit


def _validate_tables(n_kw, n_k, n_dk, doc_lengths):
    if (n_kw < 0).any() or (n_dk < 0).any():
        raise AssertionError("negative count in Gibbs tables")
    if not np.array_equal(n_kw.sum(axis=1), n_k):
        raise AssertionError("topic totals out of sync with topic-term table")
    if not np.array_equal(n_dk.sum(axis=1), doc_lengths):
        raise AssertionError("document totals out of sync with lengths")


def fit_lda_gibbs(
    docs,
    n_topics: int,
    vocab_size: int | None = None,
    alpha: float | None = None,
    beta: float = 0.01,
    iters: int = 1000,
    seed: int = 0,
    collect_theta_after: int | None = None,
    validate_counts: bool = False,
    engine: str = "auto",
) -> LdaModel:
    """Fit by collapsed Gibbs sampling over in-vocabulary token id lists.

    alpha defaults to 50 / n_topics. When `collect_theta_after` is given,
    theta samples from every later sweep are averaged into
    `model.theta_mean`; otherwise theta comes from final counts.
    """
    if n_topics < 1:
        raise ValueError(f"n_topics must be >= 1, got {n_topics}")
    if iters < 0:
        raise ValueError(f"iters must be >= 0, got {iters}")
    if engine not in ("auto", "python", "numba"):
        raise ValueError(f"unknown engine {engine!r}")
    if alpha is None:
        alpha = 50.0 / n_topics
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    docs = [np.asarray(d, dtype=np.int32) for d in docs]
    if not docs:
        raise ValueError("no documents given")
    max_id = max((int(d.max()) for d in docs if d.size), default=-1)
    if vocab_size is None:
        vocab_size = max_id + 1
    if vocab_size < 1:
        raise ValueError("vocab_size must be >= 1 (all documents are empty?)")
    if max_id >= vocab_size:
        raise ValueError(
            f"token id {max_id} out of range for vocab_size {vocab_size}"
        )
    n_docs = len(docs)
    doc_lengths = np.array([d.size for d in docs], dtype=np.int64)
    doc_offsets = np.zeros(n_docs + 1, dtype=np.int64)
    np.cumsum(doc_lengths, out=doc_offsets[1:])
    token_w = (
        np.concatenate(docs) if doc_offsets[-1] else np.empty(0, np.int32)
    )

    streams = [np.random.default_rng((seed, d)) for d in range(n_docs)]
    uniforms = np.empty(int(doc_offsets[-1]), dtype=np.float64)

    def fill_uniforms():
        for d in range(n_docs):
            lo, hi = doc_offsets[d], doc_offsets[d + 1]
            if hi > lo:
                uniforms[lo:hi] = streams[d].random(hi - lo)

    fill_uniforms()
    z = np.minimum(
        (uniforms * n_topics).astype(np.int32), n_topics - 1
    )

    n_kw = np.zeros((n_topics, vocab_size), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    for d in range(n_docs):
        lo, hi = doc_offsets[d], doc_offsets[d + 1]
        np.add.at(n_kw, (z[lo:hi], token_w[lo:hi]), 1)
        np.add.at(n_dk[d], z[lo:hi], 1)
    n_k = n_kw.sum(axis=1)

    work = float(doc_offsets[-1]) * iters * n_topics
    sweep = _get_sweep(engine, work)

    theta_acc = None
    theta_samples = 0
    if collect_theta_after is not None:
        if not 0 <= collect_theta_after < max(iters, 1):
            raise ValueError(
                "collect_theta_after must lie inside the sweep range "
                f"[0, {iters}), got {collect_theta_after}"
            )
        theta_acc = np.zeros((n_docs, n_topics), dtype=np.float64)

    denom = doc_lengths[:, None] + n_topics * alpha
    for sweep_idx in range(1, iters + 1):
        fill_uniforms()
        sweep(
            token_w, doc_offsets, z, uniforms,
            n_kw, n_k, n_dk, float(alpha), float(beta),
        )
        if validate_counts:
            _validate_tables(n_kw, n_k, n_dk, doc_lengths)
        if theta_acc is not None and sweep_idx > collect_theta_after:
            theta_acc += (n_dk + alpha) / denom
            theta_samples += 1

    theta_mean = None
    if theta_acc is not None and theta_samples:
        theta_mean = theta_acc / theta_samples

    return LdaModel(
        n_topics=n_topics,
        alpha=float(alpha),
        beta=float(beta),
        vocab_size=int(vocab_size),
        n_kw=n_kw,
        n_k=n_k,
        n_dk=n_dk,
        doc_lengths=doc_lengths,
        assignments=[
            z[doc_offsets[d]:doc_offsets[d + 1]].copy() for d in range(n_docs)
        ],
        seed=seed,
        iters_run=iters,
        theta_mean=theta_mean,
    )


def point_theta(model: LdaModel) -> np.ndarray:
    """theta from final counts: (n_dk + alpha) / (len_d + K alpha)."""
    denom = model.doc_lengths[:, None] + model.n_topics * model.alpha
    return (model.n_dk + model.alpha) / denom


def infer_theta(
    model: LdaModel,
    docs=None,
    burn_in: int = 200,
    samples: int = 10,
    seed: int = 0,
) -> np.ndarray:
    """Document-topic estimates.

    With docs=None, returns training-document theta (the sample average if
    the model collected one, else the final-count estimate). Otherwise folds
    in new token-id documents against frozen topic-term counts.
    """
    if docs is None:
        if model.theta_mean is not None:
            return model.theta_mean.copy()
        return point_theta(model)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    K = model.n_topics
    alpha, beta = model.alpha, model.beta
    vbeta = beta * model.vocab_size
    phi_w = (model.n_kw + beta) / (model.n_k + vbeta)[:, None]  # (K, V)
    theta = np.empty((len(docs), K), dtype=np.float64)
    for j, doc in enumerate(docs):
        doc = np.asarray(doc, dtype=np.int64)
        if doc.size and doc.max() >= model.vocab_size:
            raise ValueError(
                f"document {j} has token id {int(doc.max())} outside the "
                f"model vocabulary of size {model.vocab_size}"
            )
        rng = np.random.default_rng((seed, j))
        if doc.size == 0:
            theta[j] = 1.0 / K
            continue
        u = rng.random(doc.size)
        zj = np.minimum((u * K).astype(np.int64), K - 1)
        ndk = np.bincount(zj, minlength=K).astype(np.float64)
        acc = np.zeros(K, dtype=np.float64)
        denom = doc.size + K * alpha
        for sweep_idx in range(burn_in + samples):
            u = rng.random(doc.size)
            for i in range(doc.size):
                k_old = zj[i]
                ndk[k_old] -= 1
                p = (ndk + alpha) * phi_w[:, doc[i]]
                cum = np.cumsum(p)
                k_new = int(np.searchsorted(cum, u[i] * cum[-1], side="right"))
                if k_new >= K:
                    k_new = K - 1
                zj[i] = k_new
                ndk[k_new] += 1
            if sweep_idx >= burn_in:
                acc += (ndk + alpha) / denom
        theta[j] = acc / samples
    return theta


def lda_top_words(model: LdaModel, topic: int, n: int, vocab) -> list[str]:
    """Highest-probability terms under phi for one topic; ties favor the
    lexicographically smaller term. vocab is a Vocabulary or a term list."""
    terms = getattr(vocab, "terms", vocab)
    if not 0 <= topic < model.n_topics:
        raise ValueError(
            f"topic must be in [0, {model.n_topics}), got {topic}"
        )
    if len(terms) != model.vocab_size:
        raise ValueError(
            f"got {len(terms)} terms for a vocabulary of size "
            f"{model.vocab_size}"
        )
    phi = (model.n_kw[topic] + model.beta) / (
        model.n_k[topic] + model.beta * model.vocab_size
    )
    order = sorted(range(model.vocab_size), key=lambda w: (-phi[w], terms[w]))
    return [terms[w] for w in order[: min(n, model.vocab_size)]]
