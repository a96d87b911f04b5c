"""Entity grids: construction, lexicalization, permutation and transition statistics.

A grid is a sentences x entities matrix of grammatical roles. Cell values are
small integers (`Role` codes) so that grids stay cheap to copy, compare and
feed to the numeric layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

PAD_TOKEN = "<pad>"


class Role(IntEnum):
    """Grammatical role of an entity mention.

    The numeric order of ABSENT < OTHER < OBJECT < SUBJECT is the merge rank
    used when an entity is mentioned more than once in a sentence. PAD marks
    cells beyond a path's length in conversation grids and never takes part
    in rank merging.
    """

    ABSENT = 0
    OTHER = 1
    OBJECT = 2
    SUBJECT = 3
    PAD = 4

    @property
    def char(self) -> str:
        return _ROLE_CHARS[self]

    @classmethod
    def from_char(cls, char: str) -> "Role":
        try:
            return _CHAR_ROLES[char]
        except KeyError:
            raise ValidationError(f"unknown role character {char!r}") from None


_ROLE_CHARS = {
    Role.ABSENT: "-",
    Role.OTHER: "X",
    Role.OBJECT: "O",
    Role.SUBJECT: "S",
    Role.PAD: "φ",
}
_CHAR_ROLES = {"-": Role.ABSENT, "X": Role.OTHER, "O": Role.OBJECT, "S": Role.SUBJECT}

# Roles a mention may carry in annotated input (absence is implicit).
MENTION_ROLES = (Role.SUBJECT, Role.OBJECT, Role.OTHER)

Mention = tuple[str, Role]
Sentence = tuple[Mention, ...]


def normalize_entity(surface: str) -> str:
    """Case-fold and collapse internal whitespace. No stemming."""
    normalized = " ".join(surface.split()).lower()
    if not normalized:
        raise ValidationError("empty entity surface")
    return normalized


def _normalize_sentences(sentences: Iterable[Iterable[tuple[str, Role | str]]]) -> tuple[Sentence, ...]:
    out = []
    for sentence in sentences:
        mentions = []
        for surface, role in sentence:
            role = Role.from_char(role) if isinstance(role, str) else Role(role)
            if role not in MENTION_ROLES:
                raise ValidationError(f"mention role must be one of S/O/X, got {role.name}")
            mentions.append((normalize_entity(surface), role))
        out.append(tuple(mentions))
    return tuple(out)


@dataclass(frozen=True)
class AnnotatedDocument:
    """A document as an ordered list of sentences of (entity, role) mentions."""

    doc_id: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self):
        if not self.sentences:
            raise ValidationError("empty document")
        object.__setattr__(self, "sentences", _normalize_sentences(self.sentences))

    @property
    def num_sentences(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True, eq=False)
class EntityGrid:
    """Sentences x entities matrix of Role codes (no PAD cells)."""

    entities: tuple[str, ...]
    cells: np.ndarray  # (I, J) int8 of Role codes
    doc_id: str = ""

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int8)
        if cells.ndim != 2 or cells.shape[1] != len(self.entities):
            raise ValidationError("grid cells must be I x len(entities)")
        if np.any(cells == Role.PAD):
            raise ValidationError("monologue grids must not contain PAD cells")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "entities", tuple(self.entities))

    @property
    def num_sentences(self) -> int:
        return self.cells.shape[0]

    @property
    def num_entities(self) -> int:
        return self.cells.shape[1]

    def role_at(self, i: int, j: int) -> Role:
        return Role(int(self.cells[i, j]))

    def column(self, entity: str) -> np.ndarray:
        return self.cells[:, self.entities.index(entity)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EntityGrid):
            return NotImplemented
        return self.entities == other.entities and np.array_equal(self.cells, other.cells)


def build_grid(doc: AnnotatedDocument) -> EntityGrid:
    """Construct the entity grid of a document.

    One column per distinct entity in first-mention order; each cell is the
    highest-ranked role the entity takes in that sentence, ABSENT otherwise.
    """
    if not doc.sentences:
        raise ValidationError("empty document")
    order: dict[str, int] = {}
    for sentence in doc.sentences:
        for surface, _ in sentence:
            order.setdefault(surface, len(order))
    cells = np.zeros((len(doc.sentences), len(order)), dtype=np.int8)
    for i, sentence in enumerate(doc.sentences):
        for surface, role in sentence:
            j = order[surface]
            cells[i, j] = max(cells[i, j], np.int8(role))
    return EntityGrid(entities=tuple(order), cells=cells, doc_id=doc.doc_id)


def merge_sentence_roles(sentence: Sentence) -> dict[str, Role]:
    """Highest-ranked role per entity for a single sentence."""
    merged: dict[str, Role] = {}
    for surface, role in sentence:
        prev = merged.get(surface, Role.ABSENT)
        merged[surface] = role if role > prev else prev
    return merged


def role_token(entity: str, role: Role, mode: str) -> str:
    """Token for one grid cell under the given lexicalization mode."""
    if mode not in ("lexicalized", "unlexicalized"):
        raise ValidationError(f"unknown lexicalization mode {mode!r}")
    if role == Role.PAD:
        return PAD_TOKEN
    if mode == "unlexicalized" or role == Role.ABSENT:
        return role.char
    return f"{entity}-{role.char}"


def split_lexicalized(token: str) -> tuple[str, str]:
    """Split an entity-role token at its final hyphen into (entity, role char)."""
    entity, _, char = token.rpartition("-")
    if not entity or char not in _CHAR_ROLES:
        raise ValidationError(f"not a lexicalized token: {token!r}")
    return entity, char


def lexicalize(grid: EntityGrid, mode: str = "lexicalized") -> np.ndarray:
    """Token matrix (I x J, dtype=object) for a grid.

    Unlexicalized cells are the bare role characters; lexicalized non-absent
    cells fuse the entity with its role ("obama-S"). Absent cells stay "-" in
    both modes.
    """
    tokens = np.empty(grid.cells.shape, dtype=object)
    for j, entity in enumerate(grid.entities):
        for i in range(grid.num_sentences):
            tokens[i, j] = role_token(entity, Role(int(grid.cells[i, j])), mode)
    return tokens


def _check_permutation(permutation: Sequence[int], size: int) -> list[int]:
    perm = [int(p) for p in permutation]
    if sorted(perm) != list(range(size)):
        raise ValidationError(f"permutation is not a bijection on [0, {size})")
    return perm


def permute_sentences(obj: AnnotatedDocument | EntityGrid, permutation: Sequence[int]):
    """Reorder sentences/rows: row i of the output is row permutation[i] of the input."""
    if isinstance(obj, AnnotatedDocument):
        perm = _check_permutation(permutation, obj.num_sentences)
        return AnnotatedDocument(
            doc_id=obj.doc_id, sentences=tuple(obj.sentences[p] for p in perm)
        )
    if isinstance(obj, EntityGrid):
        perm = _check_permutation(permutation, obj.num_sentences)
        return EntityGrid(entities=obj.entities, cells=obj.cells[perm, :], doc_id=obj.doc_id)
    raise ValidationError(f"cannot permute object of type {type(obj).__name__}")


def inverse_order(obj: AnnotatedDocument | EntityGrid):
    """Reverse the sentence order (last to first)."""
    size = obj.num_sentences
    return permute_sentences(obj, list(range(size - 1, -1, -1)))


def transition_index(roles: Sequence[Role | int]) -> int:
    """Index of a role sequence in the transition-probability vector.

    Sequences are ordered base-4 over the role codes with the first role most
    significant, e.g. (S, O) -> 3*4 + 2.
    """
    idx = 0
    for role in roles:
        code = int(role)
        if not 0 <= code <= 3:
            raise ValidationError("transitions are defined over S, O, X and absent only")
        idx = idx * 4 + code
    return idx


def transition_probabilities(grid: EntityGrid, k: int) -> np.ndarray:
    """Distribution over all 4**k length-k role transitions of a grid.

    Counts every column-wise contiguous window of k cells and normalizes by
    the total window count J * (I - k + 1).
    """
    if k < 2:
        raise ValidationError("transition length must be at least 2")
    if k > grid.num_sentences:
        raise ValidationError("grid too short")
    if grid.num_entities == 0:
        raise ValidationError("grid has no entities")
    windows = grid.num_sentences - k + 1
    idx = np.zeros((windows, grid.num_entities), dtype=np.int64)
    for offset in range(k):
        idx = idx * 4 + grid.cells[offset : offset + windows, :]
    counts = np.bincount(idx.ravel(), minlength=4**k)
    return counts.astype(np.float64) / (windows * grid.num_entities)


def with_entity_order(grid: EntityGrid, entities: Sequence[str]) -> EntityGrid:
    """Reorder grid columns to the given entity order (must be a permutation)."""
    if sorted(entities) != sorted(grid.entities):
        raise ValidationError("entity orders do not cover the same entity set")
    cols = [grid.entities.index(e) for e in entities]
    return EntityGrid(entities=tuple(entities), cells=grid.cells[:, cols], doc_id=grid.doc_id)


def grids_equivalent(a: EntityGrid, b: EntityGrid) -> bool:
    """Entity-keyed equality: same entities and same per-entity role columns.

    Column order is representational (it depends on first-mention order), so
    permutation exclusion compares grids by entity.
    """
    if set(a.entities) != set(b.entities) or a.cells.shape[0] != b.cells.shape[0]:
        return False
    return all(np.array_equal(a.column(e), b.column(e)) for e in a.entities)
