"""Feature fusion: block standardization plus an autoencoder bottleneck.

Blocks are concatenated column-wise, standardized per block, and compressed
by a symmetric autoencoder trained on mean squared reconstruction error.
Gradients are computed in double precision by explicit backpropagation so
they can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import FeatureBlock

_ZSCORE_EPS = 1e-8

NORM_MODES = ("zscore", "l2", "none")


@dataclass
class BlockStats:
    name: str
    width: int
    mode: str
    mean: np.ndarray | None = None  # per-column, zscore only
    std: np.ndarray | None = None


@dataclass
class FusedInput:
    matrix: np.ndarray  # (n_docs, D) float64
    block_layout: list[BlockStats]

    @property
    def width(self) -> int:
        return self.matrix.shape[1]


def _standardize(dense: np.ndarray, mode: str, stats: BlockStats | None):
    """Apply one block's normalization; fit stats when stats is None."""
    if mode == "none":
        return dense, stats or None
    if mode == "l2":
        norms = np.linalg.norm(dense, axis=1, keepdims=True)
        out = np.divide(
            dense, norms, out=np.zeros_like(dense), where=norms > 0
        )
        return out, stats
    if mode == "zscore":
        if stats is None or stats.mean is None:
            mean = dense.mean(axis=0)
            std = dense.std(axis=0)  # population std
        else:
            mean, std = stats.mean, stats.std
        out = (dense - mean) / (std + _ZSCORE_EPS)
        # constant columns carry no signal; pin them to zero exactly
        out[:, std == 0] = 0.0
        return out, (mean, std)
    raise ValueError(f"unknown normalization mode {mode!r}")


def assemble_features(blocks, modes) -> FusedInput:
    """Concatenate named blocks column-wise with per-block normalization.

    modes: either one mode string for all blocks or a dict block name ->
    mode, each in {zscore, l2, none}.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("at least one feature block is required")
    n = blocks[0].n_rows
    for b in blocks:
        if b.n_rows != n:
            raise ValueError(
                f"block {b.name!r} has {b.n_rows} rows, expected {n}"
            )
    if isinstance(modes, str):
        modes = {b.name: modes for b in blocks}
    parts = []
    layout = []
    for b in blocks:
        mode = modes.get(b.name, "zscore")
        if mode not in NORM_MODES:
            raise ValueError(
                f"unknown normalization mode {mode!r} for block {b.name!r}"
            )
        dense = b.dense()
        out, fitted = _standardize(dense, mode, None)
        stats = BlockStats(name=b.name, width=b.width, mode=mode)
        if mode == "zscore":
            stats.mean, stats.std = fitted
        parts.append(out)
        layout.append(stats)
    return FusedInput(matrix=np.hstack(parts), block_layout=layout)


def apply_block_stats(blocks, layout) -> np.ndarray:
    """Re-apply stored normalization to new rows of the same blocks.

    Reproduces the training matrix bit-exactly when given the training
    blocks back.
    """
    blocks = {b.name: b for b in blocks}
    if set(blocks) != {s.name for s in layout}:
        raise ValueError(
            f"blocks {sorted(blocks)} do not match stored layout "
            f"{[s.name for s in layout]}"
        )
    parts = []
    for stats in layout:
        b = blocks[stats.name]
        if b.width != stats.width:
            raise ValueError(
                f"block {stats.name!r} has width {b.width}, stored layout "
                f"expects {stats.width}"
            )
        out, _ = _standardize(b.dense(), stats.mode, stats)
        parts.append(out)
    return np.hstack(parts)


@dataclass
class AutoencoderModel:
    dims: list[int]
    weights: list[np.ndarray]  # layer i maps dims[i] -> dims[i+1]
    biases: list[np.ndarray]
    activation: str = "relu"  # hidden layers; output is always identity
    seed: int = 0

    @property
    def latent_width(self) -> int:
        return self.dims[len(self.dims) // 2]


def init_autoencoder(dims, seed: int = 0, activation: str = "relu") -> AutoencoderModel:
    """Glorot-uniform weights, zero biases, deterministic for a seed.

    dims must read the same forwards and backwards with a single bottleneck
    in the middle, e.g. [12, 5, 3, 5, 12].
    """
    dims = [int(d) for d in dims]
    if len(dims) < 3 or len(dims) % 2 == 0:
        raise ValueError(
            f"dims must have odd length >= 3, got {len(dims)} entries"
        )
    if dims != dims[::-1]:
        raise ValueError(f"dims {dims} are not symmetric about the middle")
    if min(dims) < 1:
        raise ValueError(f"all widths must be >= 1, got {dims}")
    if activation not in ("relu", "identity"):
        raise ValueError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return AutoencoderModel(
        dims=dims, weights=weights, biases=biases,
        activation=activation, seed=seed,
    )


def _forward_pass(model: AutoencoderModel, X: np.ndarray):
    """Returns per-layer pre-activations and activations (a[0] is X)."""
    n_layers = len(model.weights)
    a = [X]
    zs = []
    h = X
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W + b
        zs.append(z)
        if i < n_layers - 1 and model.activation == "relu":
            h = np.maximum(z, 0.0)
        else:
            h = z
        a.append(h)
    return zs, a


def forward(model: AutoencoderModel, X):
    """Run the network; returns (latent, reconstruction, mse)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dims[0]:
        raise ValueError(
            f"input must be (n, {model.dims[0]}), got {X.shape}"
        )
    _, a = _forward_pass(model, X)
    latent = a[len(model.dims) // 2]
    recon = a[-1]
    mse = float(np.mean((X - recon) ** 2))
    return latent, recon, mse


def encode(model: AutoencoderModel, X) -> FeatureBlock:
    """Bottleneck representation as a feature block."""
    latent, _, _ = forward(model, X)
    return FeatureBlock("latent", latent)


def loss_and_gradients(model: AutoencoderModel, X: np.ndarray):
    """MSE and its exact partials for every weight and bias."""
    X = np.asarray(X, dtype=np.float64)
    zs, a = _forward_pass(model, X)
    recon = a[-1]
    n, d = X.shape
    loss = float(np.mean((X - recon) ** 2))
    n_layers = len(model.weights)
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers
    delta = 2.0 * (recon - X) / (n * d)
    for i in range(n_layers - 1, -1, -1):
        grads_w[i] = a[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ model.weights[i].T
            if model.activation == "relu":
                delta = delta * (zs[i - 1] > 0)
    return loss, grads_w, grads_b


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 256
    seed: int = 0
    optimizer: str = "adam"  # adam (0.9, 0.999, 1e-8) or sgd


@dataclass
class _AdamState:
    m_w: list = field(default_factory=list)
    v_w: list = field(default_factory=list)
    m_b: list = field(default_factory=list)
    v_b: list = field(default_factory=list)
    t: int = 0


def train_autoencoder(model: AutoencoderModel, X, config: TrainConfig):
    """Mini-batch training on MSE; returns (trained model, loss_history).

    history[0] is the loss before any update, then one full-dataset loss
    per epoch. The input model is not mutated. epochs=0 returns an exact
    copy.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"training input must be a nonempty matrix, got {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("training input contains non-finite values")
    if config.epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {config.epochs}")
    if config.batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {config.batch_size}")
    if config.learning_rate <= 0:
        raise ValueError(f"learning_rate must be positive, got {config.learning_rate}")
    if config.optimizer not in ("adam", "sgd"):
        raise ValueError(f"unknown optimizer {config.optimizer!r}")

    model = AutoencoderModel(
        dims=list(model.dims),
        weights=[w.copy() for w in model.weights],
        biases=[b.copy() for b in model.biases],
        activation=model.activation,
        seed=model.seed,
    )
    _, _, mse = forward(model, X)
    history = [mse]

    adam = None
    if config.optimizer == "adam":
        adam = _AdamState(
            m_w=[np.zeros_like(w) for w in model.weights],
            v_w=[np.zeros_like(w) for w in model.weights],
            m_b=[np.zeros_like(b) for b in model.biases],
            v_b=[np.zeros_like(b) for b in model.biases],
        )
    b1, b2, eps = 0.9, 0.999, 1e-8
    lr = config.learning_rate
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]

    for _epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = X[order[start:start + config.batch_size]]
            loss, gw, gb = loss_and_gradients(model, batch)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: non-finite loss {loss} at epoch "
                    f"{_epoch} (lr={lr}, optimizer={config.optimizer})"
                )
            if adam is None:
                for i in range(len(model.weights)):
                    model.weights[i] -= lr * gw[i]
                    model.biases[i] -= lr * gb[i]
            else:
                adam.t += 1
                corr1 = 1.0 - b1 ** adam.t
                corr2 = 1.0 - b2 ** adam.t
                for i in range(len(model.weights)):
                    adam.m_w[i] = b1 * adam.m_w[i] + (1 - b1) * gw[i]
                    adam.v_w[i] = b2 * adam.v_w[i] + (1 - b2) * gw[i] ** 2
                    model.weights[i] -= lr * (adam.m_w[i] / corr1) / (
                        np.sqrt(adam.v_w[i] / corr2) + eps
                    )
                    adam.m_b[i] = b1 * adam.m_b[i] + (1 - b1) * gb[i]
                    adam.v_b[i] = b2 * adam.v_b[i] + (1 - b2) * gb[i] ** 2
                    model.biases[i] -= lr * (adam.m_b[i] / corr1) / (
                        np.sqrt(adam.v_b[i] / corr2) + eps
                    )
        _, _, mse = forward(model, X)
        if not np.isfinite(mse):
            raise RuntimeError(
                f"training diverged: non-finite epoch loss at epoch {_epoch}"
            )
        history.append(mse)
    return model, history
