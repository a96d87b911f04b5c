"""Thread structures, sentence-level conversation graphs and 3D conversation grids."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .grids import (
    AnnotatedDocument,
    EntityGrid,
    Role,
    Sentence,
    _check_permutation,
    _normalize_sentences,
    merge_sentence_roles,
)

TREE_ENUMERATION_CAP = 8


@dataclass(frozen=True)
class Post:
    """One post of a thread. parent_id is None only for the initial post."""

    post_id: int
    parent_id: int | None
    sentences: tuple[Sentence, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", _normalize_sentences(self.sentences))


@dataclass(frozen=True)
class Thread:
    """A reply tree of posts with ids 1..n in chronological order."""

    thread_id: str
    posts: tuple[Post, ...]

    def __post_init__(self):
        posts = tuple(self.posts)
        if not posts:
            raise ValidationError("invalid reply structure: thread has no posts")
        for k, post in enumerate(posts, start=1):
            if post.post_id != k:
                raise ValidationError(
                    f"invalid reply structure: post ids must be 1..n in order, got {post.post_id} at position {k}"
                )
            if k == 1:
                if post.parent_id is not None:
                    raise ValidationError("invalid reply structure: post 1 must have no parent")
            elif post.parent_id is None or not 1 <= post.parent_id < k:
                raise ValidationError(
                    f"invalid reply structure: post {k} must reply to an earlier post"
                )
        object.__setattr__(self, "posts", posts)

    @property
    def num_posts(self) -> int:
        return len(self.posts)

    @property
    def total_sentences(self) -> int:
        return sum(len(p.sentences) for p in self.posts)

    @property
    def parent_vector(self) -> tuple[int, ...]:
        """Parents of posts 2..n."""
        return tuple(p.parent_id for p in self.posts[1:])

    def all_sentences(self) -> tuple[Sentence, ...]:
        """Sentences in temporal (post id, then position) order."""
        return tuple(s for p in self.posts for s in p.sentences)

    def sentence_ranges(self) -> list[range]:
        """Global sentence index range of each post, in post order."""
        ranges, start = [], 0
        for post in self.posts:
            ranges.append(range(start, start + len(post.sentences)))
            start += len(post.sentences)
        return ranges


@dataclass(frozen=True)
class SentenceGraph:
    """Sentence-level structure of a thread: parent[s] is the sentence s links to (-1 at the root)."""

    parent: tuple[int, ...]
    post_of: tuple[int, ...]  # owning post id per global sentence index

    @property
    def num_sentences(self) -> int:
        return len(self.parent)

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.num_sentences)]
        for s, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(s)
        return kids


ConvPath = tuple[int, ...]


def build_sentence_graph(thread: Thread) -> SentenceGraph:
    """Link sentences chronologically within posts and across reply edges.

    The first sentence of a reply links to the last sentence of the post it
    replies to; sentence t+1 links to sentence t inside a post.
    """
    ranges = thread.sentence_ranges()
    parent = []
    post_of = []
    for post, rng in zip(thread.posts, ranges):
        for offset, s in enumerate(rng):
            post_of.append(post.post_id)
            if offset > 0:
                parent.append(s - 1)
            elif post.parent_id is None:
                parent.append(-1)
            else:
                parent.append(ranges[post.parent_id - 1][-1])
    return SentenceGraph(parent=tuple(parent), post_of=tuple(post_of))


def extract_paths(thread: Thread, graph: SentenceGraph | None = None) -> list[ConvPath]:
    """Root-to-leaf sentence paths, one per leaf post, ordered by leaf post id."""
    if graph is None:
        graph = build_sentence_graph(thread)
    has_reply = [False] * (thread.num_posts + 1)
    for post in thread.posts[1:]:
        has_reply[post.parent_id] = True
    ranges = thread.sentence_ranges()
    paths = []
    for post in thread.posts:
        if has_reply[post.post_id]:
            continue
        post_chain = []
        pid = post.post_id
        while pid is not None:
            post_chain.append(pid)
            pid = thread.posts[pid - 1].parent_id
        post_chain.reverse()
        paths.append(tuple(s for pid in post_chain for s in ranges[pid - 1]))
    return paths


@dataclass(frozen=True, eq=False)
class ConversationGrid:
    """Entities x depth x paths role tensor with PAD cells beyond each path's length."""

    entities: tuple[str, ...]
    cells: np.ndarray  # (I, J, P) int8 of Role codes
    path_lengths: tuple[int, ...]
    thread_id: str = ""

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int8)
        if cells.ndim != 3 or cells.shape[0] != len(self.entities):
            raise ValidationError("conversation grid cells must be I x J x P")
        if cells.shape[2] != len(self.path_lengths):
            raise ValidationError("one path length per path required")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "path_lengths", tuple(self.path_lengths))

    @property
    def num_entities(self) -> int:
        return self.cells.shape[0]

    @property
    def depth(self) -> int:
        return self.cells.shape[1]

    @property
    def num_paths(self) -> int:
        return self.cells.shape[2]

    def entity_matrix(self, entity: str) -> np.ndarray:
        """The J x P role matrix of one entity."""
        return self.cells[self.entities.index(entity)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConversationGrid):
            return NotImplemented
        return (
            self.entities == other.entities
            and self.path_lengths == other.path_lengths
            and np.array_equal(self.cells, other.cells)
        )


def conversation_entities(thread: Thread) -> tuple[str, ...]:
    """Entities of a thread in first-mention order over the temporal sentence order."""
    order: dict[str, int] = {}
    for sentence in thread.all_sentences():
        for surface, _ in sentence:
            order.setdefault(surface, len(order))
    return tuple(order)


def build_conv_grid(thread: Thread) -> ConversationGrid:
    """Construct the 3D conversation grid of a thread.

    Cell (i, j, p) holds the role of entity i in the j-th sentence of path p;
    cells beyond a path's length are PAD. Shared-prefix sentences repeat
    identically across the paths that contain them.
    """
    entities = conversation_entities(thread)
    index = {e: i for i, e in enumerate(entities)}
    paths = extract_paths(thread)
    depth = max((len(p) for p in paths), default=0)
    sentences = thread.all_sentences()
    merged = [merge_sentence_roles(s) for s in sentences]
    cells = np.full((len(entities), depth, len(paths)), np.int8(Role.PAD), dtype=np.int8)
    for p, path in enumerate(paths):
        for j, s in enumerate(path):
            cells[:, j, p] = np.int8(Role.ABSENT)
            for surface, role in merged[s].items():
                cells[index[surface], j, p] = np.int8(role)
    return ConversationGrid(
        entities=entities,
        cells=cells,
        path_lengths=tuple(len(p) for p in paths),
        thread_id=thread.thread_id,
    )


def conv_grids_equivalent(a: ConversationGrid, b: ConversationGrid) -> bool:
    """Entity-keyed equality of two conversation grids over the same tree shape."""
    if (
        set(a.entities) != set(b.entities)
        or a.path_lengths != b.path_lengths
        or a.cells.shape[1:] != b.cells.shape[1:]
    ):
        return False
    return all(np.array_equal(a.entity_matrix(e), b.entity_matrix(e)) for e in a.entities)


def enumerate_valid_trees(n: int, cap: int = TREE_ENUMERATION_CAP) -> list[tuple[int, ...]]:
    """All chronologically valid parent vectors for n posts, in lexicographic order.

    A vector lists the parent of posts 2..n; each parent precedes its child,
    so there are (n-1)! vectors.
    """
    if n < 2:
        raise ValidationError("tree enumeration needs at least 2 posts")
    if n > cap:
        raise ValidationError(f"enumeration too large: {n} posts exceeds cap {cap}")
    return list(itertools.product(*[range(1, k) for k in range(2, n + 1)]))


def with_parent_vector(thread: Thread, parents: Sequence[int]) -> Thread:
    """The same posts re-linked under a candidate parent vector."""
    if len(parents) != thread.num_posts - 1:
        raise ValidationError("parent vector must cover posts 2..n")
    posts = [Post(post_id=1, parent_id=None, sentences=thread.posts[0].sentences)]
    for post, parent in zip(thread.posts[1:], parents):
        posts.append(Post(post_id=post.post_id, parent_id=int(parent), sentences=post.sentences))
    return Thread(thread_id=thread.thread_id, posts=tuple(posts))


def permute_thread(thread: Thread, permutation: Sequence[int]) -> Thread:
    """Redistribute the globally permuted sentences into the same post slots.

    Slot i of the flattened conversation receives input sentence
    permutation[i]; per-post sentence counts and the reply tree are unchanged.
    """
    flat = thread.all_sentences()
    perm = _check_permutation(permutation, len(flat))
    reordered = [flat[p] for p in perm]
    posts = []
    cursor = 0
    for post in thread.posts:
        take = len(post.sentences)
        posts.append(
            Post(
                post_id=post.post_id,
                parent_id=post.parent_id,
                sentences=tuple(reordered[cursor : cursor + take]),
            )
        )
        cursor += take
    return Thread(thread_id=thread.thread_id, posts=tuple(posts))


def thread_as_document(thread: Thread) -> AnnotatedDocument:
    """The temporal reading of a thread: all sentences in chronological order."""
    return AnnotatedDocument(doc_id=thread.thread_id, sentences=thread.all_sentences())


def path_documents(thread: Thread) -> list[AnnotatedDocument]:
    """One document per root-to-leaf path, in path order."""
    sentences = thread.all_sentences()
    return [
        AnnotatedDocument(
            doc_id=f"{thread.thread_id}/path{p}",
            sentences=tuple(sentences[s] for s in path),
        )
        for p, path in enumerate(extract_paths(thread))
    ]
