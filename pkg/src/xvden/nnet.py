"""Dense feed-forward networks with manual backpropagation and SGD.

The engine is deliberately small: affine layers with linear or tanh
activation, mean-square-error loss, and plain stochastic gradient descent
with a decaying learning rate.  No momentum, no weight decay, no early
stopping; training runs a fixed number of epochs.

Determinism contract: all randomness flows through a seeded
``numpy.random.Generator`` (PCG64).  The same seed, data, and configuration
produce bit-identical parameters on repeated runs.  Batches are visited in
shuffled order, with the shuffle drawn from the same seeded stream.

The training loop accepts any model exposing ``forward``, ``backprop`` and
``apply_gradients`` (duck-typed), so composite architectures train through
the same code path as a single network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embeddings import PairBatch
from .errors import ConfigError, DataError, ShapeError

ACTIVATIONS = ("linear", "tanh")


def mse(a, b) -> float:
    """Mean of squared differences over every element of the batch.

    Accepts single vectors or (n, dim) batches; shapes must agree exactly.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"mse shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.mean(diff * diff))


class DenseLayer:
    """Affine transform followed by a pointwise activation.

    Weights have shape (out_dim, in_dim); bias has shape (out_dim,).
    """

    def __init__(self, weights: np.ndarray, bias: np.ndarray, activation: str):
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{activation}' (use one of {ACTIVATIONS})")
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64).reshape(-1)
        self.activation = activation
        if self.weights.ndim != 2 or self.weights.shape[0] != self.bias.shape[0]:
            raise ShapeError(
                f"weights {self.weights.shape} incompatible with bias {self.bias.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise DataError("layer parameters contain non-finite entries")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def affine(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights.T + self.bias

    def activate(self, z: np.ndarray) -> np.ndarray:
        if self.activation == "tanh":
            return np.tanh(z)
        return z

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


class Network:
    """Ordered stack of dense layers with chaining dimensions."""

    def __init__(self, layers: Sequence[DenseLayer]):
        layers = list(layers)
        if not layers:
            raise ConfigError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ShapeError(
                    f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def n_params(self) -> int:
        return sum(l.weights.size + l.bias.size for l in self.layers)

    def _check_input(self, x) -> tuple[np.ndarray, bool]:
        arr = np.asarray(x, dtype=np.float64)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.in_dim:
            raise ShapeError(f"input has shape {np.shape(x)}, expected dim {self.in_dim}")
        return arr, single

    def forward(self, x) -> np.ndarray:
        """Activations of the last layer; a 1-D input yields a 1-D output."""
        arr, single = self._check_input(x)
        for layer in self.layers:
            arr = layer.activate(layer.affine(arr))
        return arr[0] if single else arr

    def forward_with_cache(self, x) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
        """Forward pass keeping per-layer (pre-activation, activation) pairs.

        The cache entry for layer i is (z_i, a_i) with a_0 = input implied;
        it is what ``backward_from`` consumes.
        """
        arr, single = self._check_input(x)
        cache = [(None, arr)]
        for layer in self.layers:
            z = layer.affine(cache[-1][1])
            cache.append((z, layer.activate(z)))
        out = cache[-1][1]
        return (out[0] if single else out), cache

    def backward_from(
        self, cache: list[tuple[np.ndarray, np.ndarray]], grad_out: np.ndarray
    ) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
        """Backpropagate dL/d(output) through the cached forward pass.

        Returns per-layer (dW, db) in layer order plus dL/d(input), enabling
        composition with upstream computations.
        """
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        g = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            _, a_i = cache[i + 1]
            if layer.activation == "tanh":
                g = g * (1.0 - a_i * a_i)
            a_prev = cache[i][1]
            grads[i] = (g.T @ a_prev, g.sum(axis=0))
            g = g @ layer.weights
        return grads, g

    def backprop(self, inputs: np.ndarray, targets: np.ndarray) -> tuple[list, float]:
        """Gradients of the batch MSE w.r.t. every weight and bias, plus the loss."""
        inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        out, cache = self.forward_with_cache(inputs)
        if out.shape != targets.shape:
            raise ShapeError(f"target shape {targets.shape} != output shape {out.shape}")
        loss = mse(out, targets)
        grad_out = (2.0 / out.size) * (out - targets)
        grads, _ = self.backward_from(cache, grad_out)
        return grads, loss

    def apply_gradients(self, grads: list, lr: float) -> None:
        for layer, (dw, db) in zip(self.layers, grads):
            layer.weights -= lr * dw
            layer.bias -= lr * db

    def copy(self) -> "Network":
        return Network([l.copy() for l in self.layers])


def init_network(layer_spec: Sequence[tuple[int, int, str]], seed: int) -> Network:
    """Build a network with Glorot-uniform weights and zero biases.

    Each spec entry is (in_dim, out_dim, activation); weights are drawn from
    U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))) using a PCG64
    generator seeded with ``seed``, so construction is fully deterministic.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for in_dim, out_dim, activation in layer_spec:
        if in_dim < 1 or out_dim < 1:
            raise ShapeError(f"layer dims must be >= 1, got ({in_dim}, {out_dim})")
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        layers.append(DenseLayer(weights, np.zeros(out_dim), activation))
    return Network(layers)


@dataclass
class TrainConfig:
    """SGD hyperparameters: 0.02 starting rate decaying by 1e-4, 100 epochs."""

    initial_lr: float = 0.02
    decay: float = 0.0001
    epochs: int = 100
    batch_size: int = 256
    seed: int = 0
    decay_mode: str = "inverse_time"  # or "subtractive_per_epoch"
    loss: str = "mse"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.initial_lr <= 0:
            raise ConfigError(f"initial_lr must be > 0, got {self.initial_lr}")
        if self.decay < 0:
            raise ConfigError(f"decay must be >= 0, got {self.decay}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.decay_mode not in ("inverse_time", "subtractive_per_epoch"):
            raise ConfigError(f"unknown decay_mode '{self.decay_mode}'")
        if self.loss != "mse":
            raise ConfigError(f"unsupported loss '{self.loss}'")
        # Subtractive schedules can cross zero; reject at validation time.
        if self.decay_mode == "subtractive_per_epoch":
            last = self.initial_lr - self.decay * (self.epochs - 1)
            if last <= 0:
                raise ConfigError(
                    f"subtractive schedule reaches lr {last:.3g} <= 0 by the final epoch"
                )


def lr_at(config: TrainConfig, update_index: int, epoch_index: int) -> float:
    """Learning rate for a given global update / epoch.

    inverse_time:          lr = initial / (1 + decay * update_index)
    subtractive_per_epoch: lr = initial - decay * epoch_index
    """
    if update_index < 0 or epoch_index < 0:
        raise ConfigError("schedule indices must be >= 0")
    if config.decay_mode == "inverse_time":
        return config.initial_lr / (1.0 + config.decay * update_index)
    return config.initial_lr - config.decay * epoch_index


@dataclass
class TrainHistory:
    """Per-epoch loss trace.

    ``train_mse[i]`` (and ``dev_mse[i]`` when a dev set is given) is the
    full-set loss measured *before* epoch i updates, so entry 0 is the loss
    of the freshly initialized model and baselines compare across
    architectures.  The post-training losses live in ``final_train_mse`` /
    ``final_dev_mse``.
    """

    train_mse: list[float] = field(default_factory=list)
    dev_mse: list[float] = field(default_factory=list)
    final_train_mse: float = float("nan")
    final_dev_mse: float = float("nan")


def _as_batch(pairs) -> PairBatch:
    if isinstance(pairs, PairBatch):
        return pairs
    return PairBatch.from_pairs(pairs)


def train(model, pairs, dev_pairs=None, config: TrainConfig | None = None):
    """Minibatch SGD on MSE(model(noisy), clean) for a fixed epoch count.

    ``model`` is anything exposing forward / backprop / apply_gradients
    (a ``Network`` or a stacked composite).  ``pairs`` and ``dev_pairs`` are
    ``EmbeddingPair`` iterables or prebuilt ``PairBatch`` objects.  The model
    is updated in place and returned together with its ``TrainHistory``.
    """
    if config is None:
        config = TrainConfig()
    config.validate()
    batch = _as_batch(pairs)
    dev = _as_batch(dev_pairs) if dev_pairs is not None else None

    n = len(batch)
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    update_index = 0
    for epoch in range(config.epochs):
        history.train_mse.append(mse(model.forward(batch.noisy), batch.clean))
        if dev is not None:
            history.dev_mse.append(mse(model.forward(dev.noisy), dev.clean))
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            grads, _ = model.backprop(batch.noisy[idx], batch.clean[idx])
            model.apply_gradients(grads, lr_at(config, update_index, epoch))
            update_index += 1
    history.final_train_mse = mse(model.forward(batch.noisy), batch.clean)
    if dev is not None:
        history.final_dev_mse = mse(model.forward(dev.noisy), dev.clean)
    return model, history
