"""File formats: JSON-lines corpora, grid TSV, embedding text files, digests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .conversation import Post, Thread
from .errors import ValidationError
from .grids import AnnotatedDocument, EntityGrid, Role


def _parse_jsonl(path: str | Path):
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None


def _sentences_from_json(raw, where: str):
    if not isinstance(raw, list):
        raise ValidationError(f"{where}: 'sentences' must be a list")
    sentences = []
    for sentence in raw:
        mentions = []
        for mention in sentence:
            if not (isinstance(mention, (list, tuple)) and len(mention) == 2):
                raise ValidationError(f"{where}: mentions must be [entity, role] pairs")
            mentions.append((str(mention[0]), str(mention[1])))
        sentences.append(mentions)
    return sentences


def read_documents_jsonl(path: str | Path) -> list[AnnotatedDocument]:
    """Documents from JSON lines: {"doc_id": str, "sentences": [[["entity", "S|O|X"], ...], ...]}."""
    docs = []
    for lineno, record in _parse_jsonl(path):
        where = f"{path}:{lineno}"
        try:
            docs.append(
                AnnotatedDocument(
                    doc_id=str(record["doc_id"]),
                    sentences=_sentences_from_json(record["sentences"], where),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"{where}: missing field {exc}") from None
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
    return docs


def write_documents_jsonl(docs: Iterable[AnnotatedDocument], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            record = {
                "doc_id": doc.doc_id,
                "sentences": [[[e, r.char] for e, r in s] for s in doc.sentences],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _parent_from_json(raw, where: str) -> int | None:
    """Reply target; a list of parents is reduced to the earliest one."""
    if raw is None:
        return None
    if isinstance(raw, list):
        if not raw or not all(isinstance(p, int) for p in raw):
            raise ValidationError(f"{where}: 'parent' list must hold post ids")
        return min(raw)
    if isinstance(raw, int):
        return raw
    raise ValidationError(f"{where}: 'parent' must be an int, a list of ints or null")


def read_threads_jsonl(path: str | Path) -> list[Thread]:
    """Threads from JSON lines: {"thread_id": str, "posts": [{"id", "parent", "sentences"}, ...]}."""
    threads = []
    for lineno, record in _parse_jsonl(path):
        where = f"{path}:{lineno}"
        try:
            posts = tuple(
                Post(
                    post_id=int(p["id"]),
                    parent_id=_parent_from_json(p.get("parent"), where),
                    sentences=_sentences_from_json(p["sentences"], where),
                )
                for p in record["posts"]
            )
            threads.append(Thread(thread_id=str(record["thread_id"]), posts=posts))
        except KeyError as exc:
            raise ValidationError(f"{where}: missing field {exc}") from None
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
    return threads


def write_threads_jsonl(threads: Iterable[Thread], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for thread in threads:
            record = {
                "thread_id": thread.thread_id,
                "posts": [
                    {
                        "id": post.post_id,
                        "parent": post.parent_id,
                        "sentences": [[[e, r.char] for e, r in s] for s in post.sentences],
                    }
                    for post in thread.posts
                ],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def grid_to_tsv(grid: EntityGrid) -> str:
    """TSV rendering: entity header line, then one role-character row per sentence."""
    lines = ["\t".join(grid.entities)]
    for row in grid.cells:
        lines.append("\t".join(Role(int(c)).char for c in row))
    return "\n".join(lines) + "\n"


def parse_grid_tsv(text: str, doc_id: str = "") -> EntityGrid:
    lines = [line for line in text.splitlines()]
    if not lines:
        raise ValidationError("empty grid TSV")
    entities = tuple(lines[0].split("\t"))
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        chars = line.split("\t")
        if len(chars) != len(entities):
            raise ValidationError(f"grid TSV line {lineno}: expected {len(entities)} cells")
        rows.append([np.int8(Role.from_char(c)) for c in chars])
    return EntityGrid(entities=entities, cells=np.array(rows, dtype=np.int8), doc_id=doc_id)


def load_embedding_text(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Load a plain-text embedding file.

    Format: an optional "count dim" header line, then one token per line
    followed by its vector. Returns (token -> float64 vector, dim).
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            token, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric embedding value") from None
            if dim is None:
                dim = vec.size
            if vec.size != dim:
                raise ValidationError(
                    f"{path}:{lineno}: expected {dim} values, got {vec.size}"
                )
            vectors[token] = vec
    if dim is None:
        raise ValidationError(f"{path}: no embedding vectors found")
    return vectors, dim


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
