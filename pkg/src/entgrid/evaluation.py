"""Discrimination and thread-reconstruction evaluation with tie-conservative metrics."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .conversation import (
    Thread,
    build_conv_grid,
    enumerate_valid_trees,
    extract_paths,
    with_parent_vector,
)
from .errors import ValidationError
from .grids import AnnotatedDocument
from .pairs import PairItem, PairSet, pair_token_arrays

DISCRIMINATION = "discrimination"
INVERSE = "inverse"


@dataclass(frozen=True)
class PairDecision:
    """One forced choice; ties (y_pos == y_neg) are never correct."""

    doc_id: str
    perm_id: int
    y_pos: float
    y_neg: float

    @property
    def correct(self) -> bool:
        return self.y_pos > self.y_neg

    @property
    def tie(self) -> bool:
        return self.y_pos == self.y_neg


@dataclass
class EvalReport:
    """Pair-level evaluation result; metrics are fractions in [0, 1]."""

    task: str
    setting: str
    num_pairs: int
    num_ties: int
    accuracy: float
    f1: float
    decisions: list[PairDecision] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "setting": self.setting,
            "num_pairs": self.num_pairs,
            "num_ties": self.num_ties,
            "accuracy": self.accuracy,
            "f1": self.f1,
        }

    def to_text(self) -> str:
        rows = [
            ("task", self.task),
            ("setting", self.setting),
            ("pairs", str(self.num_pairs)),
            ("ties", str(self.num_ties)),
            ("accuracy", f"{100.0 * self.accuracy:.2f}%"),
            ("macro F1", f"{100.0 * self.f1:.2f}%"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"

    def decisions_csv(self) -> str:
        lines = ["doc_id,perm_id,y_pos,y_neg,correct"]
        for d in self.decisions:
            lines.append(f"{d.doc_id},{d.perm_id},{d.y_pos!r},{d.y_neg!r},{int(d.correct)}")
        return "\n".join(lines) + "\n"


def aggregate_decisions(
    pair_set: PairSet, y_pos: np.ndarray, y_neg: np.ndarray
) -> list[PairDecision]:
    """Per-pair decisions; the path setting aggregates per conversation shuffle.

    A conversation counts as correct only when strictly more of its path
    decisions favor the original than the shuffle (win/loss counts become the
    decision's scores, so the tie rule carries over).
    """
    if pair_set.setting != "path":
        return [
            PairDecision(item.doc_id, item.perm_id, float(p), float(n))
            for item, p, n in zip(pair_set.items, y_pos, y_neg)
        ]
    order: list[tuple[int, int]] = []
    groups: dict[tuple[int, int], list[int]] = {}
    for i, item in enumerate(pair_set.items):
        key = (item.doc_index, item.perm_id)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(i)
    decisions = []
    for key in order:
        idx = groups[key]
        wins = sum(1 for i in idx if y_pos[i] > y_neg[i])
        losses = sum(1 for i in idx if y_pos[i] < y_neg[i])
        first = pair_set.items[idx[0]]
        decisions.append(PairDecision(first.doc_id, first.perm_id, float(wins), float(losses)))
    return decisions


def summarize_decisions(decisions: Sequence[PairDecision]) -> tuple[float, float, int]:
    """(accuracy, macro F1, tie count).

    Accuracy counts ties as incorrect. F1 counts each pair symmetrically under
    both presentation orders with ties as abstentions, so F1 equals accuracy
    when there are no ties and exceeds it otherwise.
    """
    n = len(decisions)
    if n == 0:
        raise ValidationError("no decisions to summarize")
    correct = sum(1 for d in decisions if d.correct)
    ties = sum(1 for d in decisions if d.tie)
    wrong = n - correct - ties
    accuracy = correct / n
    denom = 2 * correct + 2 * wrong + ties
    f1 = (2 * correct / denom) if denom else 0.0
    return accuracy, f1, ties


def _scores(model, arrays, workers: int, batch_size: int = 256) -> np.ndarray:
    if not arrays:
        return np.zeros(0)
    if workers <= 1:
        return model.score_token_arrays(arrays, batch_size=batch_size)
    chunks = [arrays[i : i + batch_size] for i in range(0, len(arrays), batch_size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: model.score_token_arrays(c, batch_size=batch_size), chunks))
    return np.concatenate(parts)


def _check_model_kind(model, setting: str) -> None:
    expected = "conversation" if setting == "tree" else "grid"
    if getattr(model, "_kind", None) != expected:
        raise ValidationError(
            f"setting/grid mismatch: {setting!r} evaluation needs a {expected} model"
        )


def discriminate(model, pair_set: PairSet, workers: int = 1) -> EvalReport:
    """Standard discrimination: rank each original above its shuffled rendering."""
    if len(pair_set) == 0:
        raise ValidationError("no pairs to evaluate")
    _check_model_kind(model, pair_set.setting)
    mode = "lexicalized" if model.lexicalized else "unlexicalized"
    tokens = pair_token_arrays(pair_set, mode)
    y_pos = _scores(model, [p for p, _ in tokens], workers)
    y_neg = _scores(model, [n for _, n in tokens], workers)
    decisions = aggregate_decisions(pair_set, y_pos, y_neg)
    accuracy, f1, ties = summarize_decisions(decisions)
    return EvalReport(
        task=DISCRIMINATION,
        setting=pair_set.setting,
        num_pairs=len(decisions),
        num_ties=ties,
        accuracy=accuracy,
        f1=f1,
        decisions=decisions,
    )


def build_inverse_pairs(corpus: Sequence, setting: str) -> PairSet:
    """One pair per source: the original against its reversed sentence order.

    Single-sentence sources are skipped (the reversal is the original); no
    other exclusions apply, so palindromic grids stay in and count as ties.
    """
    pair_set = PairSet(setting=setting, corpus=list(corpus))
    for doc_index, source in enumerate(pair_set.corpus):
        if setting == "monologue":
            size = source.num_sentences
            doc_id = source.doc_id
        else:
            size = source.total_sentences
            doc_id = source.thread_id
        if size < 2:
            continue
        reverse = tuple(range(size - 1, -1, -1))
        if setting == "path":
            for path_index in range(len(extract_paths(source))):
                pair_set.items.append(
                    PairItem(doc_index, doc_id, 0, reverse, path_index=path_index)
                )
        else:
            pair_set.items.append(PairItem(doc_index, doc_id, 0, reverse))
    return pair_set


def inverse_eval(model, corpus: Sequence, setting: str, workers: int = 1) -> EvalReport:
    """Original-vs-reversed discrimination using the already trained model."""
    pair_set = build_inverse_pairs(corpus, setting)
    report = discriminate(model, pair_set, workers=workers)
    report.task = INVERSE
    return report


# ------------------------------------------------------------- reconstruction


def reconstruct(model, thread: Thread, cap: int = 8, workers: int = 1) -> tuple[int, ...]:
    """Predict a thread's reply structure by scoring every valid tree.

    Candidates are enumerated in lexicographic parent-vector order and the
    first maximum wins, so score ties resolve to the smallest vector.
    """
    _check_model_kind(model, "tree")
    if thread.num_posts < 2:
        return ()
    candidates = enumerate_valid_trees(thread.num_posts, cap=cap)
    if len(candidates) == 1:
        return candidates[0]
    mode = "lexicalized" if model.lexicalized else "unlexicalized"
    from .pairs import token_matrix  # local import to keep module deps one-way

    arrays = [
        token_matrix(build_conv_grid(with_parent_vector(thread, cand)), mode)
        for cand in candidates
    ]
    scores = _scores(model, arrays, workers)
    return candidates[int(np.argmax(scores))]


def baseline_all_previous(thread: Thread) -> tuple[int, ...]:
    """Each post replies to the post just before it."""
    return tuple(range(1, thread.num_posts))


def baseline_all_first(thread: Thread) -> tuple[int, ...]:
    """Each post replies to the initial post."""
    return tuple(1 for _ in range(1, thread.num_posts))


def _tfidf_vectors(thread: Thread) -> list[dict[str, float]]:
    bags = [
        Counter(surface for sentence in post.sentences for surface, _ in sentence)
        for post in thread.posts
    ]
    num_posts = len(bags)
    df = Counter(term for bag in bags for term in set(bag))
    idf = {term: math.log((1 + num_posts) / (1 + count)) + 1.0 for term, count in df.items()}
    return [{term: count * idf[term] for term, count in bag.items()} for bag in bags]


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    dot = sum(value * b.get(term, 0.0) for term, value in a.items())
    norm_a = math.sqrt(sum(v * v for v in a.values()))
    norm_b = math.sqrt(sum(v * v for v in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def baseline_cos_sim(thread: Thread) -> tuple[int, ...]:
    """Each post replies to its most TF-IDF-similar predecessor.

    IDF is computed within the thread; equal similarities pick the earliest
    predecessor and a zero-similarity post falls back to the previous one.
    """
    vectors = _tfidf_vectors(thread)
    parents = []
    for k in range(2, thread.num_posts + 1):
        sims = [_cosine(vectors[k - 1], vectors[j - 1]) for j in range(1, k)]
        best = max(sims)
        parents.append(1 + sims.index(best) if best > 0.0 else k - 1)
    return tuple(parents)


@dataclass
class ReconstructionReport:
    """Thread- and edge-level reconstruction quality; fractions in [0, 1]."""

    num_threads: int
    thread_accuracy: float
    edge_accuracy: float
    edge_f1: float

    def to_json_dict(self) -> dict:
        return {
            "num_threads": self.num_threads,
            "thread_accuracy": self.thread_accuracy,
            "edge_accuracy": self.edge_accuracy,
            "edge_f1": self.edge_f1,
        }

    def to_text_row(self, name: str) -> tuple[str, str, str, str]:
        return (
            name,
            f"{100.0 * self.thread_accuracy:.2f}",
            f"{100.0 * self.edge_f1:.2f}",
            f"{100.0 * self.edge_accuracy:.2f}",
        )


def reconstruction_metrics(
    predicted: Sequence[tuple[int, ...]], gold_threads: Sequence[Thread]
) -> ReconstructionReport:
    """Exact-tree accuracy, micro edge accuracy and macro per-thread edge F1.

    Predicted and gold edge counts match per thread, so per-thread edge F1
    equals per-thread edge accuracy; the macro average still differs from the
    micro accuracy when thread sizes vary.
    """
    if len(predicted) != len(gold_threads):
        raise ValidationError("one prediction per gold thread required")
    if not gold_threads:
        raise ValidationError("no threads to evaluate")
    exact = 0
    correct_edges = 0
    total_edges = 0
    per_thread_f1 = []
    for pred, thread in zip(predicted, gold_threads):
        gold = thread.parent_vector
        if len(pred) != len(gold):
            raise ValidationError(f"prediction for {thread.thread_id} has wrong length")
        exact += int(tuple(pred) == gold)
        hits = sum(1 for a, b in zip(pred, gold) if a == b)
        correct_edges += hits
        total_edges += len(gold)
        if gold:
            per_thread_f1.append(hits / len(gold))
    return ReconstructionReport(
        num_threads=len(gold_threads),
        thread_accuracy=exact / len(gold_threads),
        edge_accuracy=(correct_edges / total_edges) if total_edges else 0.0,
        edge_f1=float(np.mean(per_thread_f1)) if per_thread_f1 else 0.0,
    )


def reconstruction_table(reports: dict[str, ReconstructionReport]) -> str:
    """Aligned text table of reconstruction systems (percentages)."""
    header = ("system", "thread acc", "edge F1", "edge acc")
    rows = [header] + [report.to_text_row(name) for name, report in reports.items()]
    widths = [max(len(row[c]) for row in rows) for c in range(4)]
    lines = ["  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)) for row in rows]
    return "\n".join(lines) + "\n"
