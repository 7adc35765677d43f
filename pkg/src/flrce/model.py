"""Flat-parameter MLP classifier, softmax cross-entropy loss and the local SGD trainer.

Every model lives in one contiguous float64 vector. Layers are packed in order,
each as a row-major ``(fan_in, fan_out)`` weight block followed by its bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ClientSkip, ConfigurationError

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    hidden_dims: tuple[int, ...]
    output_classes: int
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1:
            raise ConfigurationError("must be >= 1", "model.input_dim")
        if self.output_classes < 2:
            raise ConfigurationError("must be >= 2", "model.output_classes")
        if any(h < 1 for h in self.hidden_dims):
            raise ConfigurationError("every hidden width must be >= 1", "model.hidden_dims")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"must be one of {ACTIVATIONS}", "model.activation")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim, *self.hidden_dims, self.output_classes]

    @property
    def num_params(self) -> int:
        sizes = self.layer_sizes
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    local_epochs: int = 5
    batch_size: int = 16

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigurationError("must be >= 0", "train.learning_rate")
        if self.local_epochs < 1:
            raise ConfigurationError("must be >= 1", "train.local_epochs")
        if self.batch_size < 1:
            raise ConfigurationError("must be >= 1", "train.batch_size")


@dataclass
class ClientState:
    client_id: int
    data: Dataset
    train: TrainConfig = field(default_factory=TrainConfig)

    @property
    def num_samples(self) -> int:
        return self.data.num_samples


def _unpack(params: np.ndarray, spec: ModelSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1 or params.size != spec.num_params:
        raise ConfigurationError(
            f"parameter vector has size {params.size}, model expects {spec.num_params}",
            "params",
        )
    layers = []
    offset = 0
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = params[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = params[offset : offset + fan_out]
        offset += fan_out
        layers.append((w, b))
    return layers


def _check_batch(spec: ModelSpec, features: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ConfigurationError("batch must be a non-empty 2-D feature matrix", "batch")
    if x.shape[1] != spec.input_dim:
        raise ConfigurationError(
            f"feature width {x.shape[1]} != input_dim {spec.input_dim}", "batch"
        )
    if y.shape != (x.shape[0],):
        raise ConfigurationError("labels must be 1-D with one entry per row", "batch")
    if y.size and (y.min() < 0 or y.max() >= spec.output_classes):
        raise ConfigurationError(
            f"labels must lie in [0, {spec.output_classes})", "batch"
        )
    return x, y.astype(np.int64)


def init_params(spec: ModelSpec, seed: int | np.random.Generator) -> np.ndarray:
    """Uniform(-s, s) init with s = 1/sqrt(fan_in), biases included."""
    rng = np.random.default_rng(seed)
    chunks = []
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        s = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-s, s, size=fan_in * fan_out))
        chunks.append(rng.uniform(-s, s, size=fan_out))
    return np.concatenate(chunks)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _forward(layers, x: np.ndarray, kind: str):
    activations = [x]
    pre = []
    a = x
    for i, (w, b) in enumerate(layers):
        z = a @ w + b
        if i < len(layers) - 1:
            pre.append(z)
            a = _activate(z, kind)
            activations.append(a)
        else:
            a = z
    return a, activations, pre


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def logits(params: np.ndarray, spec: ModelSpec, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ConfigurationError(f"feature width must be {spec.input_dim}", "batch")
    out, _, _ = _forward(_unpack(params, spec), x, spec.activation)
    return out


def predict(params: np.ndarray, spec: ModelSpec, features: np.ndarray) -> np.ndarray:
    return np.argmax(logits(params, spec, features), axis=1)


def forward_loss(params: np.ndarray, spec: ModelSpec, features: np.ndarray, labels: np.ndarray) -> float:
    """Mean softmax cross-entropy of the batch."""
    x, y = _check_batch(spec, features, labels)
    out, _, _ = _forward(_unpack(params, spec), x, spec.activation)
    logp = _log_softmax(out)
    return float(-logp[np.arange(y.size), y].mean())


def loss_and_gradient(
    params: np.ndarray, spec: ModelSpec, features: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    x, y = _check_batch(spec, features, labels)
    layers = _unpack(params, spec)
    out, activations, pre = _forward(layers, x, spec.activation)
    logp = _log_softmax(out)
    n = y.size
    loss = float(-logp[np.arange(n), y].mean())

    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n

    grads: list[np.ndarray] = [None] * (2 * len(layers))  # type: ignore[list-item]
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        grads[2 * i] = (activations[i].T @ delta).ravel()
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ w.T
            if spec.activation == "relu":
                delta = delta * (pre[i - 1] > 0)
            else:
                delta = delta * (1.0 - activations[i] ** 2)
    return loss, np.concatenate(grads)


def gradient(params: np.ndarray, spec: ModelSpec, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return loss_and_gradient(params, spec, features, labels)[1]


def local_train(
    global_w: np.ndarray,
    client: ClientState,
    spec: ModelSpec,
    *,
    seed: int = 0,
    round: int = 1,
) -> np.ndarray:
    """Run E epochs of mini-batch SGD from ``global_w`` and return ``w_local - global_w``.

    Batch order is a fresh permutation per epoch drawn from a generator keyed on
    ``(seed, client_id, round)``, so the update is replayable.
    """
    data = client.data
    if data.num_samples == 0:
        raise ClientSkip(f"client {client.client_id} has no samples")
    cfg = client.train
    w0 = np.array(global_w, dtype=np.float64)
    if w0.shape != (spec.num_params,):
        raise ConfigurationError(
            f"global model has size {w0.size}, model expects {spec.num_params}", "params"
        )
    x, y = _check_batch(spec, data.features, data.labels)
    if cfg.learning_rate == 0:
        return np.zeros_like(w0)

    rng = np.random.default_rng([seed, client.client_id, round])
    w = w0.copy()
    n = y.size
    for _ in range(cfg.local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, g = loss_and_gradient(w, spec, x[idx], y[idx])
            w -= cfg.learning_rate * g
    return w - w0
