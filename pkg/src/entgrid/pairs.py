"""Ordered training pairs: permutation sampling, per-setting exclusions, batching order.

A pair ranks an original grid above a grid built from the same material with
its sentences globally shuffled. Settings:

- monologue: documents, 1D grids.
- temporal:  threads read in chronological sentence order, 1D grids.
- path:      one 1D grid per root-to-leaf path; a conversation pair expands
             into per-path pairs and paths whose shuffled content matches the
             original path are removed.
- tree:      3D conversation grids, one pair per shuffle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .conversation import (
    ConversationGrid,
    Thread,
    build_conv_grid,
    conv_grids_equivalent,
    extract_paths,
    permute_thread,
    thread_as_document,
)
from .errors import ValidationError
from .grids import (
    AnnotatedDocument,
    EntityGrid,
    Role,
    build_grid,
    grids_equivalent,
    lexicalize,
    permute_sentences,
    role_token,
)

logger = logging.getLogger(__name__)

SETTINGS = ("monologue", "temporal", "path", "tree")


@dataclass(frozen=True)
class PairItem:
    """Provenance of one ordered pair: which source, which shuffle, which path."""

    doc_index: int
    doc_id: str
    perm_id: int
    permutation: tuple[int, ...]
    path_index: int | None = None


@dataclass
class PairSet:
    """Pairs bound to their corpus; items reference docs/threads by index."""

    setting: str
    corpus: list
    items: list[PairItem] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def doc_indices(self) -> list[int]:
        return sorted({item.doc_index for item in self.items})


def token_matrix(grid: EntityGrid | ConversationGrid, mode: str) -> np.ndarray:
    """Stacked token matrix of a grid, ready for the network.

    Monologue grids flatten entity-major into a single column (rows = I*J);
    conversation grids stack entities along the depth axis (rows = I*J,
    columns = paths).
    """
    if isinstance(grid, EntityGrid):
        tokens = lexicalize(grid, mode)
        return tokens.T.reshape(-1, 1)
    out = np.empty((grid.num_entities * grid.depth, grid.num_paths), dtype=object)
    for i, entity in enumerate(grid.entities):
        for j in range(grid.depth):
            for p in range(grid.num_paths):
                out[i * grid.depth + j, p] = role_token(
                    entity, Role(int(grid.cells[i, j, p])), mode
                )
    return out


def sample_permutations(
    size: int, count: int, rng: np.random.Generator, attempts_factor: int = 20
) -> list[tuple[int, ...]]:
    """Up to `count` distinct non-identity permutations of range(size)."""
    identity = tuple(range(size))
    seen: set[tuple[int, ...]] = set()
    out: list[tuple[int, ...]] = []
    for _ in range(max(200, attempts_factor * count)):
        if len(out) >= count:
            break
        perm = tuple(int(x) for x in rng.permutation(size))
        if perm == identity or perm in seen:
            continue
        seen.add(perm)
        out.append(perm)
    return out


def _path_contents(thread: Thread) -> list[tuple]:
    sentences = thread.all_sentences()
    return [tuple(sentences[s] for s in path) for path in extract_paths(thread)]


def generate_pairs(
    corpus: Sequence,
    setting: str,
    permutations_per_doc: int,
    rng: np.random.Generator,
) -> PairSet:
    """Sample shuffles per document/thread and drop degenerate pairs.

    Shuffles whose grid (in the chosen representation) equals the original are
    excluded; in the path setting, matching paths are removed pair-wise.
    Single-sentence sources are skipped with a warning.
    """
    if setting not in SETTINGS:
        raise ValidationError(f"unknown setting {setting!r}")
    pair_set = PairSet(setting=setting, corpus=list(corpus))
    for doc_index, source in enumerate(pair_set.corpus):
        if setting == "monologue":
            if not isinstance(source, AnnotatedDocument):
                raise ValidationError("monologue pairs need AnnotatedDocument inputs")
            size = source.num_sentences
        else:
            if not isinstance(source, Thread):
                raise ValidationError(f"{setting} pairs need Thread inputs")
            size = source.total_sentences
        doc_id = source.doc_id if isinstance(source, AnnotatedDocument) else source.thread_id
        if size < 2:
            logger.warning("skipping %s: fewer than 2 sentences", doc_id)
            continue
        perms = sample_permutations(size, permutations_per_doc, rng)
        if setting == "monologue":
            original = build_grid(source)
            for perm_id, perm in enumerate(perms):
                shuffled = build_grid(permute_sentences(source, perm))
                if grids_equivalent(original, shuffled):
                    continue
                pair_set.items.append(PairItem(doc_index, doc_id, perm_id, perm))
        elif setting == "temporal":
            original = build_grid(thread_as_document(source))
            for perm_id, perm in enumerate(perms):
                shuffled = build_grid(thread_as_document(permute_thread(source, perm)))
                if grids_equivalent(original, shuffled):
                    continue
                pair_set.items.append(PairItem(doc_index, doc_id, perm_id, perm))
        elif setting == "tree":
            original = build_conv_grid(source)
            for perm_id, perm in enumerate(perms):
                shuffled = build_conv_grid(permute_thread(source, perm))
                if conv_grids_equivalent(original, shuffled):
                    continue
                pair_set.items.append(PairItem(doc_index, doc_id, perm_id, perm))
        else:  # path
            original_paths = _path_contents(source)
            for perm_id, perm in enumerate(perms):
                shuffled_paths = _path_contents(permute_thread(source, perm))
                for path_index, (orig, shuf) in enumerate(zip(original_paths, shuffled_paths)):
                    if orig == shuf:
                        continue
                    pair_set.items.append(
                        PairItem(doc_index, doc_id, perm_id, perm, path_index=path_index)
                    )
    return pair_set


def _positive_grid(source, setting: str, path_index: int | None):
    if setting == "monologue":
        return build_grid(source)
    if setting == "temporal":
        return build_grid(thread_as_document(source))
    if setting == "tree":
        return build_conv_grid(source)
    sentences = source.all_sentences()
    path = extract_paths(source)[path_index]
    return build_grid(
        AnnotatedDocument(
            doc_id=f"{source.thread_id}/path{path_index}",
            sentences=tuple(sentences[s] for s in path),
        )
    )


def _negative_grid(source, setting: str, permutation, path_index: int | None):
    if setting == "monologue":
        return build_grid(permute_sentences(source, permutation))
    shuffled = permute_thread(source, permutation)
    if setting == "temporal":
        return build_grid(thread_as_document(shuffled))
    if setting == "tree":
        return build_conv_grid(shuffled)
    return _positive_grid(shuffled, "path", path_index)


def pair_token_arrays(pair_set: PairSet, mode: str) -> list[tuple[np.ndarray, np.ndarray]]:
    """Token matrices (positive, negative) for every pair, positives cached."""
    positives: dict[tuple[int, int | None], np.ndarray] = {}
    out = []
    for item in pair_set.items:
        key = (item.doc_index, item.path_index)
        pos = positives.get(key)
        source = pair_set.corpus[item.doc_index]
        if pos is None:
            pos = token_matrix(_positive_grid(source, pair_set.setting, item.path_index), mode)
            positives[key] = pos
        neg = token_matrix(
            _negative_grid(source, pair_set.setting, item.permutation, item.path_index), mode
        )
        out.append((pos, neg))
    return out


def split_dev(
    pair_set: PairSet, dev_fraction: float, rng: np.random.Generator
) -> tuple[PairSet, PairSet]:
    """Document-level split: whole documents move to dev until its share is reached."""
    train = PairSet(setting=pair_set.setting, corpus=pair_set.corpus)
    dev = PairSet(setting=pair_set.setting, corpus=pair_set.corpus)
    docs = pair_set.doc_indices()
    if dev_fraction <= 0 or len(docs) < 2:
        train.items = list(pair_set.items)
        return train, dev
    order = [docs[i] for i in rng.permutation(len(docs))]
    target = dev_fraction * len(pair_set)
    dev_docs: set[int] = set()
    count = 0
    for doc in order:
        if count >= target or len(dev_docs) >= len(docs) - 1:
            break
        dev_docs.add(doc)
        count += sum(1 for item in pair_set.items if item.doc_index == doc)
    for item in pair_set.items:
        (dev if item.doc_index in dev_docs else train).items.append(item)
    return train, dev


def stratified_order(pair_set: PairSet, rng: np.random.Generator) -> list[int]:
    """Epoch ordering that spreads each document's pairs apart.

    Pairs are grouped by document, each group shuffled, then emitted
    round-robin with the document order reshuffled every round, so a positive
    never meets all of its negatives consecutively.
    """
    groups: dict[int, list[int]] = {}
    for i, item in enumerate(pair_set.items):
        groups.setdefault(item.doc_index, []).append(i)
    queues = []
    for doc in sorted(groups):
        idx = groups[doc]
        queues.append([idx[k] for k in rng.permutation(len(idx))])
    order: list[int] = []
    while queues:
        for q in [queues[k] for k in rng.permutation(len(queues))]:
            order.append(q.pop())
        queues = [q for q in queues if q]
    return order
