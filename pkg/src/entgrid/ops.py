"""Numerical primitives on single grids: lookup, convolution, pooling, scoring.

These are the reference operations. Each takes plain numpy arrays and is kept
simple enough to check against brute-force loops; the batched training engine
in `network` must agree with them elementwise.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def lookup(token_indices: np.ndarray, embeddings: np.ndarray) -> np.ndarray:
    """Embed a grid of token indices; appends the embedding axis."""
    idx = np.asarray(token_indices)
    if idx.size and (idx.min() < 0 or idx.max() >= embeddings.shape[0]):
        raise ValidationError("token index out of vocabulary range")
    return embeddings[idx]


def flatten_entity_major(L: np.ndarray) -> np.ndarray:
    """Flatten an I x J x d embedding tensor entity by entity to (I*J) x d."""
    I, J, d = L.shape
    return np.transpose(L, (1, 0, 2)).reshape(I * J, d)


def conv1d_transitions(L: np.ndarray, weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """1D convolution over the entity-major flattening of a grid.

    L is I x J x d; each of the N filters (weights column, length m*d) slides
    over the length-I*J token sequence with stride 1, windows crossing entity
    boundaries. Returns N feature maps of length I*J - m + 1, ReLU applied.
    """
    I, J, d = L.shape
    md, N = weights.shape
    if md % d != 0:
        raise ValidationError("filter size is not a multiple of the embedding dim")
    m = md // d
    if m > I * J:
        raise ValidationError(f"filter length {m} exceeds flattened grid length {I * J}")
    seq = flatten_entity_major(L)
    length = I * J - m + 1
    windows = np.stack([seq[t : t + m].reshape(-1) for t in range(length)])
    return relu(windows @ weights + biases).T


def conv2d_transitions(L: np.ndarray, weights: np.ndarray, biases: np.ndarray, n: int) -> np.ndarray:
    """2D convolution over a conversation tensor.

    L is I x J x P x d; entities are stacked along the depth axis into an
    (I*J) x P grid of embeddings. Each filter (weights column, length m*n*d)
    covers an m x n window; returns N maps of shape (I*J - m + 1) x (P - n + 1).
    """
    I, J, P, d = L.shape
    mnd, N = weights.shape
    if mnd % (n * d) != 0:
        raise ValidationError("filter size is not a multiple of n * embedding dim")
    m = mnd // (n * d)
    if n > P:
        raise ValidationError(f"filter wider than path count: n={n}, P={P}")
    if m > I * J:
        raise ValidationError(f"filter length {m} exceeds stacked grid height {I * J}")
    stacked = L.reshape(I * J, P, d)
    rows, cols = I * J - m + 1, P - n + 1
    out = np.empty((N, rows, cols))
    for r in range(rows):
        for c in range(cols):
            window = stacked[r : r + m, c : c + n].reshape(-1)
            out[:, r, c] = window @ weights + biases
    return relu(out)


def maxpool1d(feature_map: np.ndarray, l: int) -> np.ndarray:
    """Maxima over consecutive non-overlapping windows of l features.

    A final partial window is pooled as-is, so a length-F map yields
    ceil(F / l) values.
    """
    if l < 1:
        raise ValidationError("pool length must be >= 1")
    x = np.asarray(feature_map, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValidationError("maxpool1d expects a non-empty vector")
    return np.array([x[start : start + l].max() for start in range(0, x.size, l)])


def maxpool2d(feature_map: np.ndarray, l: int, w: int) -> np.ndarray:
    """2D analogue of maxpool1d with non-overlapping l x w windows."""
    if l < 1 or w < 1:
        raise ValidationError("pool window sides must be >= 1")
    x = np.asarray(feature_map, dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise ValidationError("maxpool2d expects a non-empty matrix")
    rows = math.ceil(x.shape[0] / l)
    cols = math.ceil(x.shape[1] / w)
    out = np.empty((rows, cols))
    for r in range(rows):
        for c in range(cols):
            out[r, c] = x[r * l : (r + 1) * l, c * w : (c + 1) * w].max()
    return out


def linear_score(pooled: np.ndarray, u: np.ndarray, b: float) -> float:
    """Coherence score u . p + b."""
    pooled = np.asarray(pooled, dtype=np.float64).ravel()
    u = np.asarray(u, dtype=np.float64).ravel()
    if pooled.shape != u.shape:
        raise ValidationError(
            f"pooled features and weight vector differ in length: {pooled.size} vs {u.size}"
        )
    return float(pooled @ u + b)


def hinge_rank_loss(y_pos: float, y_neg: float) -> float:
    """Pairwise ranking hinge: max(0, 1 - y_pos + y_neg)."""
    return max(0.0, 1.0 - float(y_pos) + float(y_neg))
