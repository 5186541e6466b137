"""Scoring and evaluation: confusion counts, P/R/F1, group tables, correlation.

Each trained model is scored on its 20 test songs by argmax prediction.
Metrics are macro-averaged: the unweighted mean over (run, lyricist) pairs
within each entropy group. A pooled mode (summing counts before computing
metrics) is available for comparison.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus
from .errors import ConstantVectorError, MissingGroupError
from .grouping import Grouping
from .sampling import ExperimentDataset


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class RunScore:
    """Per-candidate confusion counts from one dataset's test split."""

    dataset_id: str
    counts: dict  # lyricist_id -> ConfusionCounts
    n_test: int

    @property
    def correct(self) -> int:
        return sum(c.tp for c in self.counts.values())

    @property
    def accuracy(self) -> float:
        return self.correct / self.n_test

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "n_test": self.n_test,
            "counts": {
                lid: {"tp": c.tp, "fp": c.fp, "fn": c.fn} for lid, c in self.counts.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunScore":
        counts = {
            lid: ConfusionCounts(c["tp"], c["fp"], c["fn"]) for lid, c in data["counts"].items()
        }
        return cls(dataset_id=data["dataset_id"], counts=counts, n_test=data["n_test"])


def save_score(score: RunScore, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(score.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_score(path) -> RunScore:
    with open(path, "r", encoding="utf-8") as fh:
        return RunScore.from_dict(json.load(fh))


def score_run(model, dataset: ExperimentDataset, corpus: Corpus) -> RunScore:
    """Score a trained model on the dataset's test songs.

    Predicted label is the argmax of the probability vector; ties break to
    the lowest candidate index. The model only needs a predict_batch method,
    so built-in and plug-in models score identically.
    """
    texts = []
    y_true = []
    for idx, lid in enumerate(dataset.candidate_lyricists):
        for song_id in dataset.splits[lid].test:
            texts.append(corpus.song(song_id).lyrics)
            y_true.append(idx)
    probs = model.predict_batch(texts)

    k = len(dataset.candidate_lyricists)
    tp = [0] * k
    fp = [0] * k
    fn = [0] * k
    for truth, row in zip(y_true, probs):
        pred = 0
        best = row[0]
        for j in range(1, k):  # explicit scan: ties go to the lowest index
            if row[j] > best:
                best = row[j]
                pred = j
        if pred == truth:
            tp[truth] += 1
        else:
            fp[pred] += 1
            fn[truth] += 1

    counts = {
        lid: ConfusionCounts(tp[i], fp[i], fn[i])
        for i, lid in enumerate(dataset.candidate_lyricists)
    }
    score = RunScore(dataset_id=dataset.dataset_id, counts=counts, n_test=len(texts))
    # every test song lands in exactly one of tp/fn for its true lyricist
    assert all(c.tp + c.fn == len(dataset.splits[lid].test) for lid, c in counts.items())
    return score


def metrics(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with the 0/0 -> 0 convention."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class PairMetrics:
    """One (run, lyricist) pair's metric values."""

    dataset_id: str
    lyricist_id: str
    group: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class GroupRow:
    group: int
    n_pairs: int
    precision: float
    recall: float
    f1: float


def pair_metrics(scores, grouping: Grouping) -> list[PairMetrics]:
    assignment = grouping.assignment
    pairs = []
    for score in sorted(scores, key=lambda s: s.dataset_id):
        for lid in sorted(score.counts):
            if lid not in assignment:
                raise MissingGroupError(f"lyricist {lid!r} has no group assignment")
            c = score.counts[lid]
            p, r, f1 = metrics(c.tp, c.fp, c.fn)
            pairs.append(PairMetrics(score.dataset_id, lid, assignment[lid], p, r, f1))
    return pairs


def aggregate(scores, grouping: Grouping, pooled: bool = False) -> list[GroupRow]:
    """Group metric table over all scored runs.

    Macro (default): unweighted mean of per-(run, lyricist) metrics in each
    group. Pooled: sum TP/FP/FN per group first, then compute metrics once.
    """
    pairs = pair_metrics(scores, grouping)
    rows = []
    for k in sorted({p.group for p in pairs}):
        members = [p for p in pairs if p.group == k]
        if pooled:
            assignment = grouping.assignment
            tp = fp = fn = 0
            for score in scores:
                for lid, c in score.counts.items():
                    if assignment[lid] == k:
                        tp += c.tp
                        fp += c.fp
                        fn += c.fn
            p, r, f1 = metrics(tp, fp, fn)
        else:
            n = len(members)
            p = sum(m.precision for m in members) / n
            r = sum(m.recall for m in members) / n
            f1 = sum(m.f1 for m in members) / n
        rows.append(GroupRow(group=k, n_pairs=len(members), precision=p, recall=r, f1=f1))
    return rows


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    n = len(x)
    if n != len(y):
        raise ValueError(f"length mismatch: {n} vs {len(y)}")
    if n < 3:
        raise ConstantVectorError(f"need at least 3 points, got {n}")
    mx = sum(x) / n
    my = sum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = sum(v * v for v in dx)
    syy = sum(v * v for v in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantVectorError("correlation is undefined for a constant vector")
    sxy = sum(a * b for a, b in zip(dx, dy))
    return sxy / math.sqrt(sxx * syy)


def _average_ranks(values) -> list[float]:
    """Ranks 1..n with ties sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1  # 1-based
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rho: Pearson on average ranks."""
    return pearson(_average_ranks(x), _average_ranks(y))


def correlation(group_entropies, group_f1) -> tuple[float, float]:
    """(Pearson r, Spearman rho) between group entropies and group F1."""
    return pearson(group_entropies, group_f1), spearman(group_entropies, group_f1)
