"""Input validation helpers for the estimator surfaces."""

from __future__ import annotations

from typing import Sequence

from .conversation import Thread
from .errors import ValidationError
from .grids import AnnotatedDocument


def validate_documents(documents: Sequence) -> list[AnnotatedDocument]:
    """Check a collection of AnnotatedDocument inputs (types construct-validate themselves)."""
    docs = list(documents)
    if not docs:
        raise ValidationError("empty document collection")
    for i, doc in enumerate(docs):
        if not isinstance(doc, AnnotatedDocument):
            raise ValidationError(f"item {i} is not an AnnotatedDocument: {type(doc).__name__}")
    return docs


def validate_threads(threads: Sequence) -> list[Thread]:
    """Check a collection of Thread inputs."""
    out = list(threads)
    if not out:
        raise ValidationError("empty thread collection")
    for i, thread in enumerate(out):
        if not isinstance(thread, Thread):
            raise ValidationError(f"item {i} is not a Thread: {type(thread).__name__}")
    return out
