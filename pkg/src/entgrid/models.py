"""Coherence ranking estimators: pairwise ranking training over entity grids.

Two sklearn-style estimators share one training engine: `GridCoherenceRanker`
scores 1D (monologue / temporal / per-path) grids, `ConversationCoherenceRanker`
scores 3D conversation grids with a 2D convolution. Fitting generates ordered
(original, shuffled) pairs, minimizes the pairwise hinge loss with RMSprop and
keeps the parameters of the epoch with the best dev discrimination accuracy.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import TrainConfig
from .conversation import ConversationGrid, Thread, build_conv_grid
from .errors import NumericError, ValidationError
from .evaluation import aggregate_decisions, summarize_decisions
from .grids import AnnotatedDocument, EntityGrid, build_grid
from .io import load_embedding_text
from .network import CoherenceNetwork, NetConfig, init_params
from .optim import RMSprop
from .pairs import PairSet, generate_pairs, pair_token_arrays, split_dev, stratified_order, token_matrix
from .rng import substream
from .validation import validate_documents, validate_threads
from .vocab import Vocab

logger = logging.getLogger(__name__)


class _CoherenceRankerBase(BaseEstimator):
    """Shared fitting/scoring engine; subclasses fix the grid kind."""

    _kind = ""  # "grid" or "conversation"

    # ------------------------------------------------------------------- fit

    def _mode(self) -> str:
        return "lexicalized" if self.lexicalized else "unlexicalized"

    def _row_cap(self) -> int | None:
        raise NotImplementedError

    def _col_cap(self) -> int | None:
        raise NotImplementedError

    def _net_config(self, max_rows: int, max_cols: int) -> NetConfig:
        raise NotImplementedError

    def fit_pairs(self, train_pairs: PairSet, dev_pairs: PairSet | None = None):
        """Fit from pre-generated pair sets (the in-memory view of the CLI flow)."""
        if len(train_pairs) == 0:
            raise ValidationError("no training pairs")
        if dev_pairs is None:
            dev_pairs = PairSet(setting=train_pairs.setting, corpus=train_pairs.corpus)
        expected = "conversation" if train_pairs.setting == "tree" else "grid"
        if expected != self._kind:
            raise ValidationError(
                f"setting/grid mismatch: {train_pairs.setting!r} pairs cannot train {type(self).__name__}"
            )
        mode = self._mode()
        train_tokens = pair_token_arrays(train_pairs, mode)
        dev_tokens = pair_token_arrays(dev_pairs, mode) if len(dev_pairs) else []
        vocab = Vocab.build((pos for pos, _ in train_tokens), mode)

        observed_rows = max(max(p.shape[0], n.shape[0]) for p, n in train_tokens)
        observed_cols = max(max(p.shape[1], n.shape[1]) for p, n in train_tokens)
        max_rows = self._row_cap() or observed_rows
        max_cols = self._col_cap() or observed_cols
        max_rows = max(max_rows, self.filter_length)
        cfg = self._net_config(max_rows=max_rows, max_cols=max_cols)

        self.vocab_ = vocab
        self.net_config_ = cfg
        enc_train = [(self._encode(p), self._encode(n)) for p, n in train_tokens]
        enc_dev = [(self._encode(p), self._encode(n)) for p, n in dev_tokens]

        pretrained = None
        if self.embeddings_path:
            pretrained, _ = load_embedding_text(self.embeddings_path)
        params, state = init_params(cfg, vocab, substream(self.seed, "init"), pretrained)
        net = CoherenceNetwork(cfg, params, state)
        optimizer = RMSprop(params, lr=self.learning_rate, rho=self.rho, eps=self.epsilon)
        shuffle_rng = substream(self.seed, "shuffle")

        history: list[dict] = []
        best = None  # (acc, params, state, epoch)
        for epoch in range(1, self.max_epochs + 1):
            order = stratified_order(train_pairs, shuffle_rng)
            losses: list[float] = []
            for start in range(0, len(order), self.batch_size):
                chunk = order[start : start + self.batch_size]
                pos = [enc_train[i][0] for i in chunk]
                neg = [enc_train[i][1] for i in chunk]
                batch_losses, _, cache = net.pair_losses(pos, neg, training=True)
                if not np.all(np.isfinite(batch_losses)):
                    raise NumericError(
                        f"training diverged: non-finite loss at epoch {epoch}, step {start // self.batch_size}"
                    )
                grads = net.pair_loss_backward(batch_losses, cache)
                optimizer.step(net.params, grads)
                losses.extend(float(x) for x in batch_losses)
            mean_loss = float(np.mean(losses))
            dev_acc = self._dev_accuracy(net, enc_dev, dev_pairs) if enc_dev else float("nan")
            history.append({"epoch": epoch, "mean_loss": mean_loss, "dev_acc": dev_acc})
            logger.info("epoch %d: mean_loss=%.4f dev_acc=%s", epoch, mean_loss, dev_acc)
            if enc_dev:
                if best is None or dev_acc > best[0]:
                    best = (dev_acc, copy.deepcopy(net.params), copy.deepcopy(net.state), epoch)
            else:
                best = (float("nan"), copy.deepcopy(net.params), copy.deepcopy(net.state), epoch)

        _, self.params_, self.bn_state_, self.best_epoch_ = best
        self.history_ = history
        self.fitted_setting_ = train_pairs.setting
        self.n_train_pairs_ = len(train_pairs)
        self.n_dev_pairs_ = len(dev_pairs)
        return self

    def _dev_accuracy(self, net: CoherenceNetwork, enc_dev, dev_pairs: PairSet) -> float:
        y_pos = _score_chunked(net, [p for p, _ in enc_dev])
        y_neg = _score_chunked(net, [n for _, n in enc_dev])
        decisions = aggregate_decisions(dev_pairs, y_pos, y_neg)
        accuracy, _, _ = summarize_decisions(decisions)
        return accuracy

    # ------------------------------------------------------------------ score

    def _network(self) -> CoherenceNetwork:
        check_is_fitted(self, "params_")
        return CoherenceNetwork(self.net_config_, self.params_, self.bn_state_)

    def _encode(self, tokens: np.ndarray) -> np.ndarray:
        enc = self.vocab_.encode_grid(tokens)
        cfg = self.net_config_
        if enc.shape[0] > cfg.max_rows or enc.shape[1] > cfg.max_cols:
            logger.warning(
                "grid of shape %s truncated to fitted maxima (%d, %d)",
                enc.shape, cfg.max_rows, cfg.max_cols,
            )
            enc = enc[: cfg.max_rows, : cfg.max_cols]
        return enc

    def score_token_arrays(self, arrays: Sequence[np.ndarray], batch_size: int = 256) -> np.ndarray:
        """Coherence scores for stacked token matrices (canonical padding)."""
        net = self._network()
        encoded = [self._encode(a) for a in arrays]
        return _score_chunked(net, encoded, batch_size)

    def score_grids(self, grids: Sequence[EntityGrid | ConversationGrid]) -> np.ndarray:
        return self.score_token_arrays([token_matrix(g, self._mode()) for g in grids])


def _score_chunked(net: CoherenceNetwork, encoded, batch_size: int = 256) -> np.ndarray:
    if not encoded:
        return np.zeros(0)
    parts = [
        net.score(encoded[start : start + batch_size])
        for start in range(0, len(encoded), batch_size)
    ]
    return np.concatenate(parts)


class GridCoherenceRanker(_CoherenceRankerBase):
    """Ranks documents by coherence using 1D convolution over role transitions."""

    _kind = "grid"

    def __init__(
        self,
        embedding_dim: int = 300,
        num_filters: int = 150,
        filter_length: int = 6,
        pool_length: int = 6,
        lexicalized: bool = True,
        batchnorm: bool = True,
        batch_size: int = 32,
        max_epochs: int = 25,
        learning_rate: float = 0.001,
        rho: float = 0.9,
        epsilon: float = 1e-8,
        permutations_per_doc: int = 20,
        dev_fraction: float = 0.1,
        seed: int = 0,
        embeddings_path: str | None = None,
        max_tokens: int | None = None,
    ):
        self.embedding_dim = embedding_dim
        self.num_filters = num_filters
        self.filter_length = filter_length
        self.pool_length = pool_length
        self.lexicalized = lexicalized
        self.batchnorm = batchnorm
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.learning_rate = learning_rate
        self.rho = rho
        self.epsilon = epsilon
        self.permutations_per_doc = permutations_per_doc
        self.dev_fraction = dev_fraction
        self.seed = seed
        self.embeddings_path = embeddings_path
        self.max_tokens = max_tokens

    def _row_cap(self):
        return self.max_tokens

    def _col_cap(self):
        return 1

    def _net_config(self, max_rows: int, max_cols: int) -> NetConfig:
        return NetConfig(
            embedding_dim=self.embedding_dim,
            num_filters=self.num_filters,
            filter_length=self.filter_length,
            pool_length=self.pool_length,
            filter_width=1,
            pool_width=1,
            batchnorm=self.batchnorm,
            max_rows=max_rows,
            max_cols=1,
        )

    def fit(self, documents: Sequence[AnnotatedDocument], dev_documents=None):
        """Generate shuffle pairs from documents and train."""
        docs = validate_documents(documents)
        pairs = generate_pairs(docs, "monologue", self.permutations_per_doc, substream(self.seed, "pairs"))
        if dev_documents is not None:
            dev = generate_pairs(
                validate_documents(dev_documents),
                "monologue",
                self.permutations_per_doc,
                substream(self.seed, "dev-pairs"),
            )
            train = pairs
        else:
            train, dev = split_dev(pairs, self.dev_fraction, substream(self.seed, "dev-split"))
        return self.fit_pairs(train, dev)

    def score_documents(self, documents: Sequence[AnnotatedDocument]) -> np.ndarray:
        return self.score_grids([build_grid(d) for d in validate_documents(documents)])


class ConversationCoherenceRanker(_CoherenceRankerBase):
    """Ranks conversations by coherence using 2D convolution over 3D grids."""

    _kind = "conversation"

    def __init__(
        self,
        embedding_dim: int = 300,
        num_filters: int = 150,
        filter_length: int = 6,
        pool_length: int = 6,
        filter_width: int = 2,
        pool_width: int = 2,
        lexicalized: bool = True,
        batchnorm: bool = True,
        batch_size: int = 32,
        max_epochs: int = 25,
        learning_rate: float = 0.001,
        rho: float = 0.9,
        epsilon: float = 1e-8,
        permutations_per_doc: int = 20,
        dev_fraction: float = 0.1,
        seed: int = 0,
        embeddings_path: str | None = None,
        max_tokens: int | None = None,
        max_paths: int | None = None,
    ):
        self.embedding_dim = embedding_dim
        self.num_filters = num_filters
        self.filter_length = filter_length
        self.pool_length = pool_length
        self.filter_width = filter_width
        self.pool_width = pool_width
        self.lexicalized = lexicalized
        self.batchnorm = batchnorm
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.learning_rate = learning_rate
        self.rho = rho
        self.epsilon = epsilon
        self.permutations_per_doc = permutations_per_doc
        self.dev_fraction = dev_fraction
        self.seed = seed
        self.embeddings_path = embeddings_path
        self.max_tokens = max_tokens
        self.max_paths = max_paths

    def _row_cap(self):
        return self.max_tokens

    def _col_cap(self):
        return self.max_paths

    def _net_config(self, max_rows: int, max_cols: int) -> NetConfig:
        return NetConfig(
            embedding_dim=self.embedding_dim,
            num_filters=self.num_filters,
            filter_length=self.filter_length,
            pool_length=self.pool_length,
            filter_width=self.filter_width,
            pool_width=self.pool_width,
            batchnorm=self.batchnorm,
            max_rows=max_rows,
            max_cols=max(max_cols, self.filter_width),
        )

    def fit(self, threads: Sequence[Thread], dev_threads=None):
        """Generate shuffle pairs from threads and train the tree-level model."""
        threads = validate_threads(threads)
        pairs = generate_pairs(threads, "tree", self.permutations_per_doc, substream(self.seed, "pairs"))
        if dev_threads is not None:
            dev = generate_pairs(
                validate_threads(dev_threads),
                "tree",
                self.permutations_per_doc,
                substream(self.seed, "dev-pairs"),
            )
            train = pairs
        else:
            train, dev = split_dev(pairs, self.dev_fraction, substream(self.seed, "dev-split"))
        return self.fit_pairs(train, dev)

    def score_threads(self, threads: Sequence[Thread]) -> np.ndarray:
        return self.score_grids([build_conv_grid(t) for t in validate_threads(threads)])


_ESTIMATORS = {
    "GridCoherenceRanker": GridCoherenceRanker,
    "ConversationCoherenceRanker": ConversationCoherenceRanker,
}

_FITTED_SCALARS = ("best_epoch_", "fitted_setting_", "n_train_pairs_", "n_dev_pairs_")


def _arrays_to_payload(arrays: dict[str, np.ndarray]) -> list[dict]:
    return [
        {"name": name, "shape": list(value.shape), "values": value.ravel().tolist()}
        for name, value in sorted(arrays.items())
    ]


def _arrays_from_payload(payload: list[dict]) -> dict[str, np.ndarray]:
    return {
        entry["name"]: np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        for entry in payload
    }


def save_model(model: _CoherenceRankerBase, path: str | Path) -> None:
    """Write a self-describing JSON checkpoint; float64 values round-trip bitwise."""
    check_is_fitted(model, "params_")
    payload = {
        "format": "entgrid-checkpoint",
        "version": 1,
        "estimator": type(model).__name__,
        "hyperparams": model.get_params(),
        "net_config": model.net_config_.to_dict(),
        "vocab": {"mode": model.vocab_.mode, "tokens": list(model.vocab_.tokens)},
        "weights": _arrays_to_payload(model.params_),
        "bn_state": _arrays_to_payload(model.bn_state_),
        "history": model.history_,
        "meta": {name: getattr(model, name) for name in _FITTED_SCALARS},
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path):
    """Rebuild a fitted estimator from a checkpoint written by save_model."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid checkpoint JSON: {exc.msg}") from None
    if payload.get("format") != "entgrid-checkpoint":
        raise ValidationError(f"{path}: not an entgrid checkpoint")
    cls = _ESTIMATORS.get(payload.get("estimator"))
    if cls is None:
        raise ValidationError(f"{path}: unknown estimator {payload.get('estimator')!r}")
    model = cls(**payload["hyperparams"])
    model.vocab_ = Vocab(tokens=tuple(payload["vocab"]["tokens"]), mode=payload["vocab"]["mode"])
    model.net_config_ = NetConfig(**payload["net_config"])
    model.params_ = _arrays_from_payload(payload["weights"])
    model.bn_state_ = _arrays_from_payload(payload["bn_state"])
    model.history_ = payload["history"]
    for name in _FITTED_SCALARS:
        setattr(model, name, payload["meta"][name])
    return model
