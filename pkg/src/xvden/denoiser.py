"""Embedding denoisers: a plain autoencoder and a stacked refinement chain.

Two architectures map a corrupted embedding y toward its clean version x:

* plain: one hidden tanh layer wider than the embedding, linear output.
* stacked: a chain of blocks.  The first block is the plain architecture;
  every later block receives the previous block's output concatenated with
  the residual (y minus that output), an explicit estimate of what the
  chain has not yet removed, and refines the reconstruction.  All blocks
  train jointly: gradients reach earlier blocks both through the output
  slot and, with flipped sign, through the residual slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingSet
from .errors import ConfigError, ShapeError
from .nnet import Network, TrainConfig, TrainHistory, init_network, train
from .plda import Fingerprint, apply_fingerprint


def build_dae(dim: int = 512, hidden: int = 1024, seed: int = 0) -> Network:
    """Plain denoiser: dim -> hidden (tanh) -> dim (linear)."""
    return init_network([(dim, hidden, "tanh"), (hidden, dim, "linear")], seed)


class StackedDaeModel:
    """Jointly trained chain of denoiser blocks with residual concatenation.

    ``blocks[0]`` maps dim -> dim; every later block maps 2*dim -> dim,
    consuming [previous output; residual] in that fixed order.
    """

    def __init__(self, blocks: list[Network], dim: int):
        if len(blocks) < 2:
            raise ConfigError("a stacked model needs at least 2 blocks")
        if blocks[0].in_dim != dim or blocks[0].out_dim != dim:
            raise ShapeError(f"block 1 must map {dim} -> {dim}")
        for i, block in enumerate(blocks[1:], start=2):
            if block.in_dim != 2 * dim or block.out_dim != dim:
                raise ShapeError(f"block {i} must map {2 * dim} -> {dim}")
        self.blocks = blocks
        self.dim = dim

    @property
    def n_params(self) -> int:
        return sum(b.n_params for b in self.blocks)

    def forward(self, y) -> np.ndarray:
        arr = np.atleast_2d(np.asarray(y, dtype=np.float64))
        x = self.blocks[0].forward(arr)
        for block in self.blocks[1:]:
            x = block.forward(np.hstack([x, arr - x]))
        return x[0] if np.asarray(y).ndim == 1 else x

    def backprop(self, inputs: np.ndarray, targets: np.ndarray) -> tuple[list, float]:
        """Per-block gradient lists for the joint MSE objective.

        The residual slot of block i+1 carries y - x_i, so the gradient
        arriving at x_i is (output-slot gradient) minus (residual-slot
        gradient).
        """
        y = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        caches = []
        x, cache = self.blocks[0].forward_with_cache(y)
        caches.append(cache)
        for block in self.blocks[1:]:
            x, cache = block.forward_with_cache(np.hstack([x, y - x]))
            caches.append(cache)
        if x.shape != targets.shape:
            raise ShapeError(f"target shape {targets.shape} != output shape {x.shape}")
        diff = x - targets
        loss = float(np.mean(diff * diff))
        g = (2.0 / x.size) * diff
        grads: list[list] = [None] * len(self.blocks)
        for i in range(len(self.blocks) - 1, 0, -1):
            grads[i], g_in = self.blocks[i].backward_from(caches[i], g)
            g = g_in[:, : self.dim] - g_in[:, self.dim :]
        grads[0], _ = self.blocks[0].backward_from(caches[0], g)
        return grads, loss

    def apply_gradients(self, grads: list, lr: float) -> None:
        for block, block_grads in zip(self.blocks, grads):
            block.apply_gradients(block_grads, lr)

    def copy(self) -> "StackedDaeModel":
        return StackedDaeModel([b.copy() for b in self.blocks], self.dim)


@dataclass
class StackedTrace:
    """Intermediates of one stacked forward pass: block outputs and residuals."""

    block_outputs: list[np.ndarray]
    residuals: list[np.ndarray]

    @property
    def x1(self) -> np.ndarray:
        return self.block_outputs[0]

    @property
    def z(self) -> np.ndarray:
        return self.residuals[0]


def build_stacked(dim: int = 512, hidden: int = 1024, n_blocks: int = 2, seed: int = 0) -> StackedDaeModel:
    """Stacked denoiser with the default block shapes.

    Block 1: dim -> hidden (tanh) -> dim (linear).
    Blocks 2..n: 2*dim -> hidden (tanh) -> hidden (tanh) -> dim (linear).
    Each block gets its own deterministic seed derived from ``seed``.
    """
    if n_blocks < 2:
        raise ConfigError(f"n_blocks must be >= 2, got {n_blocks}")
    seeds = np.random.SeedSequence(seed).generate_state(n_blocks)
    blocks = [build_dae(dim, hidden, int(seeds[0]))]
    for i in range(1, n_blocks):
        blocks.append(
            init_network(
                [(2 * dim, hidden, "tanh"), (hidden, hidden, "tanh"), (hidden, dim, "linear")],
                int(seeds[i]),
            )
        )
    return StackedDaeModel(blocks, dim)


def stacked_forward(model: StackedDaeModel, y) -> tuple[np.ndarray, StackedTrace]:
    """Run the chain, returning the reconstruction and all intermediates.

    For input y: x_1 = block_1(y); each later block i computes
    x_i = block_i([x_{i-1}; y - x_{i-1}]).  The concatenation order
    [output; residual] is fixed and serialized with the model.
    """
    arr = np.asarray(y, dtype=np.float64)
    single = arr.ndim == 1
    batch = np.atleast_2d(arr)
    if batch.shape[1] != model.dim:
        raise ShapeError(f"input dim {batch.shape[1]} != model dim {model.dim}")
    outputs = [model.blocks[0].forward(batch)]
    residuals = []
    for block in model.blocks[1:]:
        z = batch - outputs[-1]
        residuals.append(z)
        outputs.append(block.forward(np.hstack([outputs[-1], z])))
    if single:
        outputs = [o[0] for o in outputs]
        residuals = [r[0] for r in residuals]
    return outputs[-1], StackedTrace(block_outputs=outputs, residuals=residuals)


@dataclass
class DenoiserModel:
    """A trained denoiser plus the metadata needed to apply it consistently."""

    model: Network | StackedDaeModel
    dim: int
    fingerprint: Fingerprint = field(default_factory=Fingerprint.identity)
    history: TrainHistory | None = None

    @property
    def kind(self) -> str:
        return "stacked" if isinstance(self.model, StackedDaeModel) else "dae"


def train_denoiser(model, pairs, dev_pairs=None, config: TrainConfig | None = None) -> DenoiserModel:
    """Train a plain or stacked denoiser on (noisy, clean) pairs.

    Both variants minimize the MSE between the final reconstruction and the
    clean target; the stacked variant's blocks are updated jointly through
    the shared loss.
    """
    dim = model.dim if isinstance(model, StackedDaeModel) else model.in_dim
    model, history = train(model, pairs, dev_pairs, config)
    return DenoiserModel(model=model, dim=dim, history=history)


def denoise(denoiser: DenoiserModel, embeddings: EmbeddingSet) -> EmbeddingSet:
    """Key-preserving application of the denoiser to a whole embedding set."""
    if embeddings.dim != denoiser.dim:
        first = embeddings.keys[0] if len(embeddings) else "<empty>"
        raise ShapeError(
            f"embedding dim {embeddings.dim} != denoiser dim {denoiser.dim} (first key '{first}')"
        )
    if len(embeddings) == 0:
        return embeddings.replace_vectors(embeddings.matrix)
    inputs = embeddings.matrix
    if denoiser.fingerprint.center or denoiser.fingerprint.length_norm:
        inputs = apply_fingerprint(inputs, denoiser.fingerprint, keys=embeddings.keys)
    return embeddings.replace_vectors(denoiser.model.forward(inputs))
