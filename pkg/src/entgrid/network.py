"""Batched coherence network with exact reverse-mode gradients.

One engine covers both architectures: a monologue grid is encoded as a
single-column token matrix (entity-major flattening), a conversation grid as
a stacked (entities x depth) x paths matrix, and the 2D convolution with
width 1 degenerates to the 1D case. All math is float64 numpy.

Layer order per grid: embedding lookup -> linear convolution -> batch
normalization on the pre-activations (optional) -> ReLU -> masked
non-overlapping max pooling zero-extended to the configured window counts ->
linear scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericError, ValidationError
from .grids import PAD_TOKEN, Role, split_lexicalized
from .vocab import UNK_TOKENS, Vocab

_SKIP_PRETRAINED = {PAD_TOKEN, "-", "S", "O", "X", *UNK_TOKENS.values()}


@dataclass(frozen=True)
class NetConfig:
    """Architecture constants fixed at fit time."""

    embedding_dim: int
    num_filters: int
    filter_length: int  # window height m over the stacked rows
    pool_length: int  # pooling window height l
    filter_width: int = 1  # window width n over paths
    pool_width: int = 1  # pooling window width w
    batchnorm: bool = True
    bn_momentum: float = 0.99
    bn_eps: float = 1e-8
    max_rows: int = 1
    max_cols: int = 1

    def __post_init__(self):
        for name in ("embedding_dim", "num_filters", "filter_length", "pool_length",
                     "filter_width", "pool_width", "max_rows", "max_cols"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.filter_length > self.max_rows:
            raise ValidationError("filter length exceeds maximum grid rows")
        if self.filter_width > self.max_cols:
            raise ValidationError(f"filter wider than path count: n={self.filter_width}, P={self.max_cols}")

    @property
    def pool_rows(self) -> int:
        return math.ceil((self.max_rows - self.filter_length + 1) / self.pool_length)

    @property
    def pool_cols(self) -> int:
        return math.ceil((self.max_cols - self.filter_width + 1) / self.pool_width)

    @property
    def pooled_size(self) -> int:
        return self.num_filters * self.pool_rows * self.pool_cols

    def to_dict(self) -> dict:
        return {
            "embedding_dim": self.embedding_dim,
            "num_filters": self.num_filters,
            "filter_length": self.filter_length,
            "pool_length": self.pool_length,
            "filter_width": self.filter_width,
            "pool_width": self.pool_width,
            "batchnorm": self.batchnorm,
            "bn_momentum": self.bn_momentum,
            "bn_eps": self.bn_eps,
            "max_rows": self.max_rows,
            "max_cols": self.max_cols,
        }


@dataclass
class Batch:
    """Padded token batch. row_ok/col_ok mark positions inside each grid's real extent."""

    tokens: np.ndarray  # (B, R, C) int32, PAD index beyond each grid
    row_ok: np.ndarray  # (B, R) bool
    col_ok: np.ndarray  # (B, C) bool

    @property
    def size(self) -> int:
        return self.tokens.shape[0]


def pad_batch(
    encoded: Sequence[np.ndarray],
    rows: int | None = None,
    cols: int | None = None,
    min_rows: int = 1,
    min_cols: int = 1,
) -> Batch:
    """Pad encoded (rows x cols) int32 token grids to a common shape.

    With rows/cols unset the batch maxima are used (training); fixed sizes give
    batch-composition-independent scores (evaluation).
    """
    if not encoded:
        raise ValidationError("empty batch")
    need_r = max(max(g.shape[0] for g in encoded), min_rows)
    need_c = max(max(g.shape[1] for g in encoded), min_cols)
    R = need_r if rows is None else rows
    C = need_c if cols is None else cols
    if R < need_r or C < need_c:
        raise ValidationError("batch padding target smaller than a grid in the batch")
    B = len(encoded)
    tokens = np.zeros((B, R, C), dtype=np.int32)
    row_ok = np.zeros((B, R), dtype=bool)
    col_ok = np.zeros((B, C), dtype=bool)
    for b, g in enumerate(encoded):
        r, c = g.shape
        tokens[b, :r, :c] = g
        row_ok[b, :r] = True
        col_ok[b, :c] = True
    return Batch(tokens=tokens, row_ok=row_ok, col_ok=col_ok)


def glorot_uniform(rng: np.random.Generator, shape: tuple, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_params(
    cfg: NetConfig,
    vocab: Vocab,
    rng: np.random.Generator,
    pretrained: dict[str, np.ndarray] | None = None,
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Fresh parameters and batch-norm state.

    Embeddings are U(-0.01, 0.01) with a zero padding row; filters and the
    scoring vector are Glorot-uniform with fan_out 1; biases start at zero.
    Lexicalized tokens whose word part appears in `pretrained` copy that
    vector, so all role variants of a word share one starting point.
    """
    V, d = len(vocab), cfg.embedding_dim
    emb = rng.uniform(-0.01, 0.01, size=(V, d))
    emb[0] = 0.0
    if pretrained:
        sample = next(iter(pretrained.values()))
        if sample.size != d:
            raise ValidationError(
                f"pretrained embedding dim {sample.size} does not match embedding_dim {d}"
            )
        for i, token in enumerate(vocab.tokens):
            if token in _SKIP_PRETRAINED:
                continue
            word, _ = split_lexicalized(token)
            vec = pretrained.get(word)
            if vec is not None:
                emb[i] = vec
    filter_size = cfg.filter_length * cfg.filter_width * d
    params = {
        "embeddings": emb,
        "conv_w": glorot_uniform(rng, (filter_size, cfg.num_filters), filter_size, 1),
        "conv_b": np.zeros(cfg.num_filters),
        "score_w": glorot_uniform(rng, (cfg.pooled_size,), cfg.pooled_size, 1),
        "score_b": np.zeros(1),
    }
    if cfg.batchnorm:
        params["bn_gamma"] = np.ones(cfg.num_filters)
        params["bn_beta"] = np.zeros(cfg.num_filters)
    state = {
        "bn_mean": np.zeros(cfg.num_filters),
        "bn_var": np.ones(cfg.num_filters),
    }
    return params, state


class CoherenceNetwork:
    """Forward/backward passes over padded batches with shared parameters."""

    def __init__(self, cfg: NetConfig, params: dict[str, np.ndarray], state: dict[str, np.ndarray]):
        self.cfg = cfg
        self.params = params
        self.state = state

    # ---------------------------------------------------------------- forward

    def forward(self, batch: Batch, training: bool) -> tuple[np.ndarray, dict]:
        cfg = self.cfg
        m, n, l, w = cfg.filter_length, cfg.filter_width, cfg.pool_length, cfg.pool_width
        B, R, C = batch.tokens.shape
        if R < m:
            raise ValidationError(f"filter length {m} exceeds flattened grid length {R}")
        if C < n:
            raise ValidationError(f"filter wider than path count: n={n}, P={C}")
        if training and cfg.batchnorm and B < 2:
            raise ValidationError("batch normalization in training mode needs batch size >= 2")
        Fr, Fc = R - m + 1, C - n + 1

        emb = self.params["embeddings"]
        L = emb[batch.tokens]  # (B, R, C, d)
        wblock = self.params["conv_w"].reshape(m, n, cfg.embedding_dim, cfg.num_filters)
        pre = np.tile(self.params["conv_b"], (B, Fr, Fc, 1))
        for a in range(m):
            for b in range(n):
                pre += L[:, a : a + Fr, b : b + Fc, :] @ wblock[a, b]

        cache: dict = {"batch": batch, "L": L, "Fr": Fr, "Fc": Fc, "training": training}

        if cfg.batchnorm:
            if training:
                mu = pre.mean(axis=(0, 1, 2))
                var = pre.var(axis=(0, 1, 2))
                mom = cfg.bn_momentum
                self.state["bn_mean"] = mom * self.state["bn_mean"] + (1 - mom) * mu
                self.state["bn_var"] = mom * self.state["bn_var"] + (1 - mom) * var
            else:
                mu, var = self.state["bn_mean"], self.state["bn_var"]
            ivar = 1.0 / np.sqrt(var + cfg.bn_eps)
            xhat = (pre - mu) * ivar
            bn_out = self.params["bn_gamma"] * xhat + self.params["bn_beta"]
            cache.update(xhat=xhat, ivar=ivar)
        else:
            bn_out = pre
        act = np.maximum(bn_out, 0.0)
        cache["positive"] = bn_out > 0

        # windows whose receptive field lies entirely in batch padding are masked out
        row_win = np.zeros((B, Fr), dtype=bool)
        for a in range(m):
            row_win |= batch.row_ok[:, a : a + Fr]
        col_win = np.zeros((B, Fc), dtype=bool)
        for b in range(n):
            col_win |= batch.col_ok[:, b : b + Fc]
        valid = row_win[:, :, None] & col_win[:, None, :]
        masked = np.where(valid[..., None], act, -np.inf)

        Wr_real, Wc_real = math.ceil(Fr / l), math.ceil(Fc / w)
        if Wr_real > cfg.pool_rows or Wc_real > cfg.pool_cols:
            raise ValidationError("batch exceeds the configured maximum grid size")
        N = cfg.num_filters
        pooled = np.zeros((B, N, cfg.pool_rows, cfg.pool_cols))
        argmax = np.full((B, N, Wr_real, Wc_real), -1, dtype=np.int64)
        for pr in range(Wr_real):
            r0, r1 = pr * l, min((pr + 1) * l, Fr)
            for pc in range(Wc_real):
                c0, c1 = pc * w, min((pc + 1) * w, Fc)
                block = masked[:, r0:r1, c0:c1, :].reshape(B, -1, N)
                am = block.argmax(axis=1)
                mx = np.take_along_axis(block, am[:, None, :], axis=1)[:, 0, :]
                finite = np.isfinite(mx)
                pooled[:, :, pr, pc] = np.where(finite, mx, 0.0)
                width = c1 - c0
                gflat = (r0 + am // width) * Fc + (c0 + am % width)
                argmax[:, :, pr, pc] = np.where(finite, gflat, -1)
        cache.update(argmax=argmax, wr_real=Wr_real, wc_real=Wc_real)

        pooled_flat = pooled.reshape(B, -1)
        scores = pooled_flat @ self.params["score_w"] + self.params["score_b"][0]
        cache["pooled_flat"] = pooled_flat
        return scores, cache

    # --------------------------------------------------------------- backward

    def backward(self, cache: dict | None, dscores: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients for every trainable parameter given dLoss/dscores."""
        if cache is None:
            raise ValidationError("backward called before forward")
        cfg = self.cfg
        m, n = cfg.filter_length, cfg.filter_width
        batch: Batch = cache["batch"]
        B = batch.size
        Fr, Fc, N = cache["Fr"], cache["Fc"], cfg.num_filters

        grads: dict[str, np.ndarray] = {}
        grads["score_w"] = cache["pooled_flat"].T @ dscores
        grads["score_b"] = np.array([dscores.sum()])
        d_pooled = np.outer(dscores, self.params["score_w"]).reshape(
            B, N, cfg.pool_rows, cfg.pool_cols
        )

        d_act = np.zeros((B, Fr, Fc, N))
        argmax = cache["argmax"]
        for pr in range(cache["wr_real"]):
            for pc in range(cache["wc_real"]):
                idx = argmax[:, :, pr, pc]
                b_i, n_i = np.nonzero(idx >= 0)
                if b_i.size == 0:
                    continue
                flat = idx[b_i, n_i]
                np.add.at(d_act, (b_i, flat // Fc, flat % Fc, n_i), d_pooled[b_i, n_i, pr, pc])

        d_bn_out = d_act * cache["positive"]

        if cfg.batchnorm:
            xhat, ivar = cache["xhat"], cache["ivar"]
            grads["bn_gamma"] = (d_bn_out * xhat).sum(axis=(0, 1, 2))
            grads["bn_beta"] = d_bn_out.sum(axis=(0, 1, 2))
            dxhat = d_bn_out * self.params["bn_gamma"]
            if cache["training"]:
                mean_dxhat = dxhat.mean(axis=(0, 1, 2))
                mean_dxhat_xhat = (dxhat * xhat).mean(axis=(0, 1, 2))
                d_pre = ivar * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)
            else:
                d_pre = ivar * dxhat
        else:
            d_pre = d_bn_out

        grads["conv_b"] = d_pre.sum(axis=(0, 1, 2))
        wblock = self.params["conv_w"].reshape(m, n, cfg.embedding_dim, N)
        d_wblock = np.zeros_like(wblock)
        L = cache["L"]
        d_L = np.zeros_like(L)
        for a in range(m):
            for b in range(n):
                seg = L[:, a : a + Fr, b : b + Fc, :]
                d_wblock[a, b] = np.einsum("bijd,bijn->dn", seg, d_pre)
                d_L[:, a : a + Fr, b : b + Fc, :] += d_pre @ wblock[a, b].T
        grads["conv_w"] = d_wblock.reshape(self.params["conv_w"].shape)

        d_emb = np.zeros_like(self.params["embeddings"])
        np.add.at(d_emb, batch.tokens.ravel(), d_L.reshape(-1, cfg.embedding_dim))
        d_emb[0] = 0.0  # padding row is never updated
        grads["embeddings"] = d_emb
        return grads

    # -------------------------------------------------------------- loss step

    def pair_losses(
        self, pos: Sequence[np.ndarray], neg: Sequence[np.ndarray], training: bool
    ) -> tuple[np.ndarray, np.ndarray, dict]:
        """Scores and hinge losses for aligned positive/negative grids.

        Both branches run through one concatenated batch so parameters and
        batch-norm statistics are shared.
        """
        if len(pos) != len(neg):
            raise ValidationError("positive and negative batches differ in length")
        batch = pad_batch(
            list(pos) + list(neg), min_rows=self.cfg.filter_length, min_cols=self.cfg.filter_width
        )
        scores, cache = self.forward(batch, training=training)
        y_pos, y_neg = scores[: len(pos)], scores[len(pos) :]
        losses = np.maximum(0.0, 1.0 - y_pos + y_neg)
        return losses, scores, cache

    def pair_loss_backward(self, losses: np.ndarray, cache: dict) -> dict[str, np.ndarray]:
        """Gradients of the mean hinge loss over a pair batch."""
        B = losses.size
        active = (losses > 0).astype(np.float64) / B
        dscores = np.concatenate([-active, active])
        return self.backward(cache, dscores)

    def score(self, encoded: Sequence[np.ndarray]) -> np.ndarray:
        """Inference-mode scores with canonical (configured-size) padding."""
        batch = pad_batch(encoded, rows=self.cfg.max_rows, cols=self.cfg.max_cols)
        scores, _ = self.forward(batch, training=False)
        return scores
