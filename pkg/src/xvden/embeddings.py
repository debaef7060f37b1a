"""Keyed embedding collections and supervision pairs.

An ``EmbeddingSet`` is an ordered, uniquely keyed collection of equal-length
float64 vectors, stored as one (n, dim) matrix so batch operations stay
vectorized.  An ``EmbeddingPair`` couples a corrupted vector with its clean
counterpart for denoiser training; one clean vector may appear in several
pairs under different corrupted versions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import DataError, MissingKeyError, ShapeError


class EmbeddingSet:
    """Ordered mapping from string keys to fixed-dimension float64 vectors."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ShapeError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self._keys: list[str] = []
        self._index: dict[str, int] = {}
        self._rows: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None

    @classmethod
    def from_items(cls, items: Iterable[tuple[str, np.ndarray]], dim: int | None = None) -> "EmbeddingSet":
        items = list(items)
        if dim is None:
            if not items:
                raise DataError("cannot infer dim from an empty item list")
            dim = len(np.asarray(items[0][1]))
        out = cls(dim)
        for key, vec in items:
            out.add(key, vec)
        return out

    def add(self, key: str, vector) -> None:
        vec = np.asarray(vector, dtype=np.float64).reshape(-1)
        if vec.shape[0] != self.dim:
            raise ShapeError(f"vector for key '{key}' has dim {vec.shape[0]}, expected {self.dim}")
        if not np.all(np.isfinite(vec)):
            raise DataError(f"vector for key '{key}' contains non-finite entries")
        if key in self._index:
            raise DataError(f"duplicate key '{key}'")
        self._index[key] = len(self._keys)
        self._keys.append(key)
        self._rows.append(vec)
        self._matrix = None

    @property
    def keys(self) -> list[str]:
        return list(self._keys)

    @property
    def matrix(self) -> np.ndarray:
        """All vectors stacked in insertion order, shape (n, dim)."""
        if self._matrix is None:
            if self._rows:
                self._matrix = np.vstack(self._rows)
            else:
                self._matrix = np.empty((0, self.dim), dtype=np.float64)
        return self._matrix

    def get(self, key: str) -> np.ndarray:
        try:
            return self._rows[self._index[key]]
        except KeyError:
            raise MissingKeyError(f"key '{key}' not found") from None

    def subset(self, keys: Iterable[str]) -> np.ndarray:
        """Rows for ``keys`` in the given order, shape (len(keys), dim)."""
        idx = []
        for key in keys:
            if key not in self._index:
                raise MissingKeyError(f"key '{key}' not found")
            idx.append(self._index[key])
        return self.matrix[idx]

    def replace_vectors(self, matrix: np.ndarray) -> "EmbeddingSet":
        """New set with identical keys and ordering but vectors from ``matrix``."""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (len(self), self.dim):
            raise ShapeError(f"replacement matrix has shape {matrix.shape}, expected {(len(self), self.dim)}")
        out = EmbeddingSet(self.dim)
        for key, row in zip(self._keys, matrix):
            out.add(key, row)
        return out

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(zip(self._keys, self._rows))

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def __len__(self) -> int:
        return len(self._keys)

    def __repr__(self) -> str:
        return f"EmbeddingSet(dim={self.dim}, n={len(self)})"


@dataclass
class EmbeddingPair:
    """(corrupted, clean) supervision pair, with optional corruption metadata."""

    key: str
    noisy: np.ndarray
    clean: np.ndarray
    snr_db: float | None = None
    noise_id: str | None = None

    def __post_init__(self):
        self.noisy = np.asarray(self.noisy, dtype=np.float64).reshape(-1)
        self.clean = np.asarray(self.clean, dtype=np.float64).reshape(-1)
        if self.noisy.shape != self.clean.shape:
            raise ShapeError(
                f"pair '{self.key}': noisy dim {self.noisy.shape[0]} != clean dim {self.clean.shape[0]}"
            )


@dataclass
class PairBatch:
    """Pairs stacked into (n, dim) matrices for vectorized training."""

    noisy: np.ndarray
    clean: np.ndarray
    keys: list[str] = field(default_factory=list)

    @classmethod
    def from_pairs(cls, pairs: Iterable[EmbeddingPair]) -> "PairBatch":
        pairs = list(pairs)
        if not pairs:
            raise DataError("empty pair list")
        dim = pairs[0].noisy.shape[0]
        for p in pairs:
            if p.noisy.shape[0] != dim:
                raise ShapeError(f"pair '{p.key}' has dim {p.noisy.shape[0]}, expected {dim}")
        return cls(
            noisy=np.vstack([p.noisy for p in pairs]),
            clean=np.vstack([p.clean for p in pairs]),
            keys=[p.key for p in pairs],
        )

    @property
    def dim(self) -> int:
        return self.noisy.shape[1]

    def __len__(self) -> int:
        return self.noisy.shape[0]
