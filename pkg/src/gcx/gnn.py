"""Graph convolutional networks with hand-written gradients.

The model is the canonical GCN stack: symmetric-normalized propagation
``A_hat @ H @ W + b`` with ReLU between layers, an optional global-max pooling
for graph classification, and a final linear classifier followed by
log-softmax. Training is full-batch Adam on the negative log likelihood of the
training units. All gradients are computed analytically (and are checked
against central finite differences in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import InputError, TrainingError
from .graph import Dataset, Graph, Task

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # 'graph_conv' | 'global_max_pool' | 'linear'
    width: int = 0
    activation: str = "none"  # 'relu' | 'log_softmax' | 'none'

    def __post_init__(self):
        if self.kind in ("graph_conv", "linear") and self.width < 1:
            raise InputError("layer width must be >= 1")


@dataclass(frozen=True)
class ModelConfig:
    layers: tuple[LayerSpec, ...]
    task: Task
    learning_rate: float
    epochs: int
    seed: int

    def __post_init__(self):
        if not self.layers or self.layers[-1].kind != "linear" or self.layers[-1].activation != "log_softmax":
            raise InputError("final layer must be a linear classifier with log_softmax")
        pools = [i for i, l in enumerate(self.layers) if l.kind == "global_max_pool"]
        if self.task is Task.GRAPH:
            if pools != [len(self.layers) - 2]:
                raise InputError("graph task needs one global_max_pool just before the linear layer")
        elif pools:
            raise InputError("node task takes no pooling layer")
        if self.epochs < 0:
            raise InputError("epochs must be >= 0")

    @property
    def conv_widths(self) -> list[int]:
        return [l.width for l in self.layers if l.kind == "graph_conv"]

    @property
    def num_convs(self) -> int:
        return len(self.conv_widths)


@dataclass(frozen=True)
class TraceLayer:
    kind: str
    row_unit: str  # 'node' | 'graph'
    data: np.ndarray


@dataclass(frozen=True)
class ActivationTrace:
    layers: tuple[TraceLayer, ...]
    final_conv_index: int

    @property
    def predictions(self) -> np.ndarray:
        return self.layers[-1].data.argmax(axis=1)


@dataclass(frozen=True)
class TrainedModel:
    config: ModelConfig
    weights: tuple  # (W, b) per trainable layer, convs first then the classifier
    train_accuracy: float
    test_accuracy: float


# Appendix-style presets: (conv count, conv width, epochs, learning rate, pooled)
PRESETS = {
    "ba_shapes": (3, 20, 3000, 0.001, False),
    "ba_grid": (3, 20, 3000, 0.001, False),
    "ba_community": (6, 50, 6000, 0.001, False),
    "tree_cycles": (3, 50, 7000, 0.001, False),
    "tree_grid": (7, 20, 10000, 0.001, False),
    "mutagenicity": (4, 30, 10000, 0.005, True),
    "reddit_binary": (4, 40, 3000, 0.005, True),
}


def make_preset(name: str, dataset: Dataset, seed: int = 0,
                epochs: Optional[int] = None, learning_rate: Optional[float] = None) -> ModelConfig:
    """Named model configuration; epochs/learning rate may be overridden."""
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    n_convs, width, preset_epochs, preset_lr, pooled = PRESETS[name]
    layers = [LayerSpec("graph_conv", width, "relu") for _ in range(n_convs)]
    if pooled:
        layers.append(LayerSpec("global_max_pool"))
    layers.append(LayerSpec("linear", dataset.num_classes, "log_softmax"))
    if pooled != (dataset.task is Task.GRAPH):
        raise InputError(f"preset {name!r} does not match the dataset task")
    return ModelConfig(
        layers=tuple(layers),
        task=dataset.task,
        learning_rate=preset_lr if learning_rate is None else learning_rate,
        epochs=preset_epochs if epochs is None else epochs,
        seed=seed,
    )


def normalize_adjacency(g: Graph) -> sp.csr_matrix:
    """Symmetric GCN propagation matrix D~^(-1/2) (A + I) D~^(-1/2)."""
    n = g.num_nodes
    rows = [u for u, _ in g.edges] + [v for _, v in g.edges] + list(range(n))
    cols = [v for _, v in g.edges] + [u for u, _ in g.edges] + list(range(n))
    vals = np.ones(len(rows), dtype=np.float64)
    a = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    d = sp.diags(inv_sqrt)
    return (d @ a @ d).tocsr()


def _block_adjacency(dataset: Dataset) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
    """Block-diagonal propagation over all graphs, feature stack, segment starts."""
    mats = [normalize_adjacency(g) for g in dataset.graphs]
    a = sp.block_diag(mats, format="csr")
    x = np.vstack([g.node_features for g in dataset.graphs])
    starts = dataset.node_offsets
    return a, x, starts


def _init_params(config: ModelConfig, feature_dim: int, rng: np.random.Generator) -> list:
    params = []
    fan_in = feature_dim
    for layer in config.layers:
        if layer.kind == "global_max_pool":
            continue
        fan_out = layer.width
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = np.zeros(fan_out)
        params.append((w, b))
        fan_in = fan_out
    return params


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _segment_max(h: np.ndarray, starts: np.ndarray) -> np.ndarray:
    return np.maximum.reduceat(h, starts, axis=0)


def _segment_argmax_rows(h: np.ndarray, pooled: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """First row index attaining each segment's per-feature maximum."""
    n, f = h.shape
    seg = np.repeat(np.arange(len(starts)), np.diff(np.append(starts, n)))
    rows = np.arange(n, dtype=np.int64)[:, None]
    masked = np.where(h == pooled[seg], rows, n)
    return np.minimum.reduceat(masked, starts, axis=0)


def _forward_full(params, config: ModelConfig, a_hat: sp.csr_matrix, x: np.ndarray,
                  starts: Optional[np.ndarray]):
    """Forward pass keeping every intermediate needed by the backward pass."""
    caches = []
    h = x
    idx = 0
    pooled_cache = None
    for layer in config.layers:
        if layer.kind == "graph_conv":
            s = a_hat @ h
            w, b = params[idx]
            z = s @ w + b
            out = np.maximum(z, 0.0) if layer.activation == "relu" else z
            caches.append({"kind": "conv", "s": s, "z": z, "h_in": h})
            h = out
            idx += 1
        elif layer.kind == "global_max_pool":
            pooled = _segment_max(h, starts)
            pooled_cache = {"kind": "pool", "h_in": h, "pooled": pooled}
            caches.append(pooled_cache)
            h = pooled
        elif layer.kind == "linear":
            w, b = params[idx]
            z = h @ w + b
            out = _log_softmax(z) if layer.activation == "log_softmax" else z
            caches.append({"kind": "linear", "h_in": h, "z": z, "out": out})
            h = out
            idx += 1
    return h, caches


def _nll_and_grad(logp: np.ndarray, labels: np.ndarray, mask: np.ndarray):
    idx = np.flatnonzero(mask)
    m = len(idx)
    if m == 0:
        raise InputError("no training units in the split")
    loss = -float(logp[idx, labels[idx]].sum()) / m
    dlogp = np.zeros_like(logp)
    dlogp[idx, labels[idx]] = -1.0 / m
    return loss, dlogp


def _backward_full(params, config: ModelConfig, caches, dout: np.ndarray,
                   a_hat: sp.csr_matrix, starts: Optional[np.ndarray]):
    grads = [None] * len(params)
    idx = len(params) - 1
    d = dout
    for layer, cache in zip(reversed(config.layers), reversed(caches)):
        if layer.kind == "linear":
            if layer.activation == "log_softmax":
                d = d - np.exp(cache["out"]) * d.sum(axis=1, keepdims=True)
            w, b = params[idx]
            grads[idx] = (cache["h_in"].T @ d, d.sum(axis=0))
            d = d @ w.T
            idx -= 1
        elif layer.kind == "global_max_pool":
            h_in = cache["h_in"]
            rows = _segment_argmax_rows(h_in, cache["pooled"], starts)
            dh = np.zeros_like(h_in)
            cols = np.broadcast_to(np.arange(h_in.shape[1]), rows.shape)
            np.add.at(dh, (rows.ravel(), cols.ravel()), d.ravel())
            d = dh
        elif layer.kind == "graph_conv":
            if layer.activation == "relu":
                d = d * (cache["z"] > 0)
            w, b = params[idx]
            grads[idx] = (cache["s"].T @ d, d.sum(axis=0))
            d = a_hat @ (d @ w.T)  # A_hat is symmetric
            idx -= 1
    return grads


def _prepare_inputs(dataset: Dataset, config: ModelConfig):
    if config.task is not dataset.task:
        raise InputError("model task does not match dataset task")
    if dataset.task is Task.NODE:
        g = dataset.graphs[0]
        return normalize_adjacency(g), g.node_features, None
    return _block_adjacency(dataset)


def _check_feature_dim(dataset: Dataset, params):
    dim = dataset.graphs[0].feature_dim
    if params[0][0].shape[0] != dim:
        raise InputError(
            f"feature dim {dim} does not match first layer input {params[0][0].shape[0]}"
        )


def forward(model: TrainedModel, dataset: Dataset) -> tuple[np.ndarray, ActivationTrace]:
    """Full forward pass: per-unit class log-probabilities plus the layer trace."""
    config = model.config
    a_hat, x, starts = _prepare_inputs(dataset, config)
    _check_feature_dim(dataset, model.weights)
    logp, caches = _forward_full(model.weights, config, a_hat, x, starts)
    layers = []
    unit = "node"
    conv_idx = -1
    for layer, cache in zip(config.layers, caches):
        if layer.kind == "graph_conv":
            h = np.maximum(cache["z"], 0.0) if layer.activation == "relu" else cache["z"]
            layers.append(TraceLayer("conv", "node", h))
            conv_idx = len(layers) - 1
        elif layer.kind == "global_max_pool":
            unit = "graph"
            layers.append(TraceLayer("pool", "graph", cache["pooled"]))
        else:
            layers.append(TraceLayer("linear", unit, cache["out"]))
    trace = ActivationTrace(layers=tuple(layers), final_conv_index=conv_idx)
    return logp, trace


def _accuracy(logp: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return 0.0
    return float((logp[idx].argmax(axis=1) == labels[idx]).mean())


def train(dataset: Dataset, config: ModelConfig) -> TrainedModel:
    """Full-batch Adam on the training-split NLL; deterministic per seed."""
    a_hat, x, starts = _prepare_inputs(dataset, config)
    rng = np.random.default_rng(config.seed)
    params = _init_params(config, x.shape[1], rng)
    _check_feature_dim(dataset, params)
    labels = dataset.unit_labels
    mask = dataset.train_mask

    m_state = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    v_state = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    lr = config.learning_rate
    for epoch in range(config.epochs):
        logp, caches = _forward_full(params, config, a_hat, x, starts)
        loss, dlogp = _nll_and_grad(logp, labels, mask)
        if not np.isfinite(loss):
            raise TrainingError(epoch)
        grads = _backward_full(params, config, caches, dlogp, a_hat, starts)
        t = epoch + 1
        bc1 = 1.0 - ADAM_BETA1**t
        bc2 = 1.0 - ADAM_BETA2**t
        for i, ((w, b), (gw, gb)) in enumerate(zip(params, grads)):
            mw, mb = m_state[i]
            vw, vb = v_state[i]
            mw = ADAM_BETA1 * mw + (1 - ADAM_BETA1) * gw
            mb = ADAM_BETA1 * mb + (1 - ADAM_BETA1) * gb
            vw = ADAM_BETA2 * vw + (1 - ADAM_BETA2) * gw**2
            vb = ADAM_BETA2 * vb + (1 - ADAM_BETA2) * gb**2
            m_state[i] = (mw, mb)
            v_state[i] = (vw, vb)
            w = w - lr * (mw / bc1) / (np.sqrt(vw / bc2) + ADAM_EPS)
            b = b - lr * (mb / bc1) / (np.sqrt(vb / bc2) + ADAM_EPS)
            params[i] = (w, b)

    logp, _ = _forward_full(params, config, a_hat, x, starts)
    return TrainedModel(
        config=config,
        weights=tuple((w.copy(), b.copy()) for w, b in params),
        train_accuracy=_accuracy(logp, labels, mask),
        test_accuracy=_accuracy(logp, labels, ~mask),
    )


def training_loss(model: TrainedModel, dataset: Dataset) -> float:
    a_hat, x, starts = _prepare_inputs(dataset, model.config)
    logp, _ = _forward_full(model.weights, model.config, a_hat, x, starts)
    loss, _ = _nll_and_grad(logp, dataset.unit_labels, dataset.train_mask)
    return loss


def gradient_check(config: ModelConfig, dataset: Dataset, seed: int, fd_step: float = 1e-5) -> float:
    """Max relative error between analytic and central finite-difference gradients."""
    if dataset.total_nodes > 30:
        raise InputError("gradient check is meant for tiny fixtures (<= 30 nodes)")
    a_hat, x, starts = _prepare_inputs(dataset, config)
    rng = np.random.default_rng(seed)
    params = _init_params(config, x.shape[1], rng)
    labels = dataset.unit_labels
    mask = dataset.train_mask

    logp, caches = _forward_full(params, config, a_hat, x, starts)
    _, dlogp = _nll_and_grad(logp, labels, mask)
    grads = _backward_full(params, config, caches, dlogp, a_hat, starts)

    def loss_at(flat_params):
        lp, _ = _forward_full(flat_params, config, a_hat, x, starts)
        loss, _ = _nll_and_grad(lp, labels, mask)
        return loss

    worst = 0.0
    for i, (w, b) in enumerate(params):
        for arr_idx, arr in enumerate((w, b)):
            analytic = grads[i][arr_idx]
            flat = arr.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + fd_step
                up = loss_at(params)
                flat[j] = orig - fd_step
                down = loss_at(params)
                flat[j] = orig
                numeric = (up - down) / (2 * fd_step)
                a_val = analytic.ravel()[j]
                rel = abs(a_val - numeric) / max(abs(a_val), abs(numeric), 1e-6)
                worst = max(worst, rel)
    return worst
