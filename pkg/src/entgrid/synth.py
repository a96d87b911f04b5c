"""Synthetic corpora with a planted coherence signal.

Each entity's role sequence follows a sticky Markov chain over
{subject, object, other, absent} (self-transition 0.7) along the sentence
order; in threads the chains evolve along the reply tree and replies reuse
most of their parent's entities, so coherence lives on root-to-leaf paths.
Shuffling sentences destroys the stickiness, which gives ranking models a
learnable ordering signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conversation import Post, Thread
from .grids import AnnotatedDocument, Role

_MENTION_CODES = (int(Role.OTHER), int(Role.OBJECT), int(Role.SUBJECT))


@dataclass
class SynthConfig:
    vocab_size: int = 120
    sentences: tuple[int, int] = (6, 12)
    entities: tuple[int, int] = (6, 12)
    role_persistence: float = 0.7
    posts: tuple[int, int] = (3, 5)
    post_sentences: tuple[int, int] = (2, 4)
    thread_entities: tuple[int, int] = (4, 7)
    branch_keep: float = 0.7
    branch_new: tuple[int, int] = (1, 3)


def _word(index: int) -> str:
    return f"e{index:03d}"


def _step(code: int, persistence: float, rng: np.random.Generator) -> int:
    if rng.random() < persistence:
        return code
    others = [c for c in range(4) if c != code]
    return others[rng.integers(0, 3)]


def _sentences_from_columns(entities, columns) -> list[list[tuple[str, Role]]]:
    num_sentences = len(columns[0])
    sentences = []
    for i in range(num_sentences):
        mentions = [
            (entity, Role(column[i]))
            for entity, column in zip(entities, columns)
            if column[i] != int(Role.ABSENT)
        ]
        sentences.append(mentions)
    return sentences


def generate_documents(
    count: int, rng: np.random.Generator, cfg: SynthConfig | None = None, prefix: str = "synth"
) -> list[AnnotatedDocument]:
    """Seeded sticky-role documents over a shared entity vocabulary."""
    cfg = cfg or SynthConfig()
    docs = []
    for d in range(count):
        num_sentences = int(rng.integers(cfg.sentences[0], cfg.sentences[1] + 1))
        num_entities = int(rng.integers(cfg.entities[0], cfg.entities[1] + 1))
        chosen = rng.choice(cfg.vocab_size, size=num_entities, replace=False)
        entities = [_word(i) for i in chosen]
        columns = []
        for _ in entities:
            code = int(rng.integers(0, 4))
            column = []
            for _ in range(num_sentences):
                column.append(code)
                code = _step(code, cfg.role_persistence, rng)
            if all(c == int(Role.ABSENT) for c in column):
                column[int(rng.integers(0, num_sentences))] = _MENTION_CODES[int(rng.integers(0, 3))]
            columns.append(column)
        docs.append(
            AnnotatedDocument(
                doc_id=f"{prefix}{d:04d}",
                sentences=_sentences_from_columns(entities, columns),
            )
        )
    return docs


def generate_threads(
    count: int, rng: np.random.Generator, cfg: SynthConfig | None = None, prefix: str = "thread"
) -> list[Thread]:
    """Seeded reply trees whose entity roles stay coherent along each path."""
    cfg = cfg or SynthConfig()
    threads = []
    for t in range(count):
        num_posts = int(rng.integers(cfg.posts[0], cfg.posts[1] + 1))
        parents = [None] + [int(rng.integers(1, k)) for k in range(2, num_posts + 1)]
        used: set[int] = set()

        def fresh_entities(n: int) -> list[str]:
            pool = [i for i in range(cfg.vocab_size) if i not in used]
            if len(pool) < n:
                pool = list(range(cfg.vocab_size))
            chosen = rng.choice(len(pool), size=n, replace=False)
            picked = [pool[int(i)] for i in chosen]
            used.update(picked)
            return [_word(i) for i in picked]

        posts: list[Post] = []
        end_states: list[dict[str, int]] = []  # per post: entity -> chain state after its last sentence
        for post_id in range(1, num_posts + 1):
            parent = parents[post_id - 1]
            if parent is None:
                topic = fresh_entities(int(rng.integers(cfg.thread_entities[0], cfg.thread_entities[1] + 1)))
                states = {e: _MENTION_CODES[int(rng.integers(0, 3))] for e in topic}
            else:
                states = {}
                for entity, code in end_states[parent - 1].items():
                    if rng.random() < cfg.branch_keep:
                        states[entity] = code
                for entity in fresh_entities(int(rng.integers(cfg.branch_new[0], cfg.branch_new[1] + 1))):
                    states[entity] = _MENTION_CODES[int(rng.integers(0, 3))]
            num_sentences = int(rng.integers(cfg.post_sentences[0], cfg.post_sentences[1] + 1))
            entities = list(states)
            columns = []
            for entity in entities:
                code = states[entity]
                column = []
                for _ in range(num_sentences):
                    column.append(code)
                    code = _step(code, cfg.role_persistence, rng)
                states[entity] = code
                columns.append(column)
            posts.append(
                Post(
                    post_id=post_id,
                    parent_id=parent,
                    sentences=_sentences_from_columns(entities, columns),
                )
            )
            end_states.append(dict(states))
        threads.append(Thread(thread_id=f"{prefix}{t:04d}", posts=tuple(posts)))
    return threads
