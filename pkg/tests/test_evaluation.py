"""Scoring, P/R/F1 aggregation, and correlation statistics."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lyristics.errors import ConstantVectorError, MissingGroupError
from lyristics.evaluation import (
    ConfusionCounts,
    RunScore,
    _average_ranks,
    aggregate,
    correlation,
    load_score,
    metrics,
    pair_metrics,
    pearson,
    save_score,
    score_run,
    spearman,
)
from lyristics.grouping import Grouping, GroupStats
from lyristics.sampling import ExperimentDataset, SplitSongs

from conftest import marker_corpus
from oracles import confusion_counts_enumerated, pearson_np, prf_reference, spearman_np_untied


class StubModel:
    """predict_batch returns pre-baked probability rows."""

    def __init__(self, rows):
        self.rows = np.asarray(rows, dtype=np.float64)

    def predict_batch(self, texts):
        assert len(texts) == len(self.rows)
        return self.rows


def small_dataset(n_classes=3, n_songs=10):
    corpus = marker_corpus(n_lyricists=n_classes, n_songs=n_songs)
    splits = {}
    for i in range(n_classes):
        ids = [f"m{i:02d}-{t:02d}" for t in range(n_songs)]
        splits[f"lyr{i:02d}"] = SplitSongs(
            train=tuple(ids[:6]), val=tuple(ids[6:8]), test=tuple(ids[8:10])
        )
    dataset = ExperimentDataset(
        dataset_id="stub",
        candidate_lyricists=tuple(f"lyr{i:02d}" for i in range(n_classes)),
        splits=splits,
        provenance={},
    )
    return corpus, dataset


def one_hot_rows(labels, k):
    rows = np.zeros((len(labels), k))
    rows[np.arange(len(labels)), labels] = 1.0
    return rows


def grouping_of(assignment):
    groups = [[], [], [], [], []]
    for lid, g in assignment.items():
        groups[g].append(lid)
    stats = tuple(GroupStats(len(g), 0.0, 0, 0.0, 0.0, 0.0) for g in groups)
    return Grouping(
        method="quantile", groups=tuple(tuple(sorted(g)) for g in groups), stats=stats
    )


class TestMetrics:
    def test_reference_points(self):
        assert metrics(1, 1, 1) == (0.5, 0.5, 0.5)
        assert metrics(0, 0, 2) == (0.0, 0.0, 0.0)
        assert metrics(2, 0, 0) == (1.0, 1.0, 1.0)
        assert metrics(0, 2, 0) == (0.0, 0.0, 0.0)
        assert metrics(0, 0, 0) == (0.0, 0.0, 0.0)

    def test_exhaustive_against_reference(self):
        for tp in range(5):
            for fp in range(5):
                for fn in range(5):
                    got = metrics(tp, fp, fn)
                    want = prf_reference(tp, fp, fn)
                    assert got == pytest.approx(want, abs=1e-15)

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_bounds(self, tp, fp, fn):
        p, r, f1 = metrics(tp, fp, fn)
        assert 0.0 <= p <= 1.0
        assert 0.0 <= r <= 1.0
        assert 0.0 <= f1 <= 1.0
        assert f1 <= max(p, r) + 1e-15


class TestScoreRun:
    def test_all_correct(self):
        corpus, dataset = small_dataset()
        truth = [0, 0, 1, 1, 2, 2]
        score = score_run(StubModel(one_hot_rows(truth, 3)), dataset, corpus)
        assert score.n_test == 6
        assert score.correct == 6
        assert score.accuracy == 1.0
        for c in score.counts.values():
            assert (c.tp, c.fp, c.fn) == (2, 0, 0)

    def test_always_first_candidate(self):
        corpus, dataset = small_dataset()
        score = score_run(StubModel(one_hot_rows([0] * 6, 3)), dataset, corpus)
        assert score.counts["lyr00"] == ConfusionCounts(tp=2, fp=4, fn=0)
        assert score.counts["lyr01"] == ConfusionCounts(tp=0, fp=0, fn=2)
        assert score.counts["lyr02"] == ConfusionCounts(tp=0, fp=0, fn=2)
        assert score.accuracy == pytest.approx(2 / 6)

    def test_tied_rows_pick_lowest_index(self):
        corpus, dataset = small_dataset()
        rows = np.full((6, 3), 1.0 / 3.0)
        score = score_run(StubModel(rows), dataset, corpus)
        assert score.counts["lyr00"].tp == 2
        assert score.counts["lyr00"].fp == 4

    def test_counts_match_enumeration_oracle(self):
        corpus, dataset = small_dataset(n_classes=10)
        rng = np.random.default_rng(5)
        y_true = [i for i in range(10) for _ in range(2)]
        y_pred = rng.integers(0, 10, size=20).tolist()
        score = score_run(StubModel(one_hot_rows(y_pred, 10)), dataset, corpus)
        expected = confusion_counts_enumerated(y_true, y_pred, 10)
        for i, lid in enumerate(dataset.candidate_lyricists):
            c = score.counts[lid]
            assert (c.tp, c.fp, c.fn) == expected[i]
        assert score.accuracy == sum(t == p for t, p in zip(y_true, y_pred)) / 20

    def test_round_trip(self, tmp_path):
        corpus, dataset = small_dataset()
        score = score_run(StubModel(one_hot_rows([0, 1, 1, 1, 2, 0], 3)), dataset, corpus)
        path = tmp_path / "score.json"
        save_score(score, path)
        again = load_score(path)
        assert again.dataset_id == score.dataset_id
        assert again.counts == score.counts
        assert again.n_test == score.n_test


class TestPairMetrics:
    def _scores(self):
        return [
            RunScore("run-b", {"x": ConfusionCounts(2, 0, 0), "y": ConfusionCounts(1, 1, 1)}, 4),
            RunScore("run-a", {"x": ConfusionCounts(0, 0, 2), "y": ConfusionCounts(2, 0, 0)}, 4),
        ]

    def test_sorted_and_grouped(self):
        grouping = grouping_of({"x": 0, "y": 3})
        pairs = pair_metrics(self._scores(), grouping)
        assert [(p.dataset_id, p.lyricist_id) for p in pairs] == [
            ("run-a", "x"),
            ("run-a", "y"),
            ("run-b", "x"),
            ("run-b", "y"),
        ]
        assert [p.group for p in pairs] == [0, 3, 0, 3]
        assert pairs[2].f1 == 1.0

    def test_missing_group(self):
        grouping = grouping_of({"x": 0})
        with pytest.raises(MissingGroupError, match="'y'"):
            pair_metrics(self._scores(), grouping)


class TestAggregate:
    def test_macro_is_unweighted_pair_mean(self):
        scores = [
            RunScore("r0", {"a": ConfusionCounts(2, 0, 0), "b": ConfusionCounts(0, 0, 2)}, 4),
            RunScore("r1", {"a": ConfusionCounts(0, 2, 2), "b": ConfusionCounts(1, 1, 1)}, 4),
        ]
        grouping = grouping_of({"a": 1, "b": 1})
        rows = aggregate(scores, grouping)
        assert len(rows) == 1
        row = rows[0]
        assert row.group == 1
        assert row.n_pairs == 4
        assert row.precision == pytest.approx((1.0 + 0.0 + 0.0 + 0.5) / 4)
        assert row.recall == pytest.approx((1.0 + 0.0 + 0.0 + 0.5) / 4)
        assert row.f1 == pytest.approx((1.0 + 0.0 + 0.0 + 0.5) / 4)

    def test_pooled_sums_counts_first(self):
        scores = [
            RunScore("r0", {"a": ConfusionCounts(2, 0, 0)}, 2),
            RunScore("r1", {"a": ConfusionCounts(0, 0, 2)}, 2),
        ]
        grouping = grouping_of({"a": 2})
        row = aggregate(scores, grouping, pooled=True)[0]
        # pooled: tp=2, fp=0, fn=2 -> p=1, r=0.5, f1=2/3
        assert row.precision == 1.0
        assert row.recall == 0.5
        assert row.f1 == pytest.approx(2 / 3)
        macro = aggregate(scores, grouping, pooled=False)[0]
        assert macro.f1 == pytest.approx(0.5)

    def test_order_independent(self):
        scores = [
            RunScore("r0", {"a": ConfusionCounts(2, 1, 0), "b": ConfusionCounts(1, 0, 1)}, 4),
            RunScore("r1", {"a": ConfusionCounts(1, 1, 1), "b": ConfusionCounts(2, 0, 0)}, 4),
            RunScore("r2", {"a": ConfusionCounts(0, 2, 2), "b": ConfusionCounts(1, 1, 1)}, 4),
        ]
        grouping = grouping_of({"a": 0, "b": 4})
        assert aggregate(scores, grouping) == aggregate(list(reversed(scores)), grouping)

    def test_groups_reported_in_index_order(self):
        scores = [
            RunScore("r0", {"a": ConfusionCounts(1, 0, 1), "b": ConfusionCounts(1, 1, 1)}, 4),
        ]
        grouping = grouping_of({"a": 4, "b": 1})
        assert [row.group for row in aggregate(scores, grouping)] == [1, 4]


class TestPearson:
    def test_perfect_lines(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert pearson(x, x) == pytest.approx(1.0, abs=1e-15)
        assert pearson(x, [-v for v in x]) == pytest.approx(-1.0, abs=1e-15)

    def test_frozen_group_table_example(self):
        entropies = [0.0, 0.428, 1.101, 2.065, 3.108]
        f1 = [0.517, 0.460, 0.451, 0.383, 0.378]
        r = pearson(entropies, f1)
        assert r == pytest.approx(-0.9395854243465236, abs=1e-12)
        assert abs(r - (-0.94)) < 0.01
        assert spearman(entropies, f1) == pytest.approx(-1.0, abs=1e-15)

    @given(
        st.lists(
            st.tuples(
                st.floats(-100, 100, allow_nan=False),
                st.floats(-100, 100, allow_nan=False),
            ),
            min_size=3,
            max_size=40,
        )
    )
    @settings(max_examples=200)
    def test_matches_numpy(self, pts):
        x = [a for a, _ in pts]
        y = [b for _, b in pts]
        # deviations can underflow to zero variance in float64; both sides
        # treat that as a constant vector, so keep the comparison off it
        assume(float(np.var(x)) > 0.0 and float(np.var(y)) > 0.0)
        expected = pearson_np(x, y)
        assume(math.isfinite(expected))
        assert pearson(x, y) == pytest.approx(expected, abs=1e-9)

    def test_affine_invariance(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=12).tolist()
        y = rng.normal(size=12).tolist()
        base = pearson(x, y)
        assert pearson([3.7 * v + 11.0 for v in x], y) == pytest.approx(base, abs=1e-12)
        assert pearson([-2.0 * v + 1.0 for v in x], y) == pytest.approx(-base, abs=1e-12)

    def test_constant_vector_rejected(self):
        with pytest.raises(ConstantVectorError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ConstantVectorError):
            pearson([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])

    def test_too_few_points_rejected(self):
        with pytest.raises(ConstantVectorError, match="at least 3"):
            pearson([1.0, 2.0], [2.0, 1.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            pearson([1.0, 2.0, 3.0], [1.0, 2.0])


class TestSpearman:
    def test_average_ranks_with_ties(self):
        assert _average_ranks([10.0, 20.0, 20.0, 30.0]) == [1.0, 2.5, 2.5, 4.0]
        assert _average_ranks([5.0, 5.0, 5.0]) == [2.0, 2.0, 2.0]

    def test_matches_numpy_on_unique_values(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = rng.permutation(20).astype(float).tolist()
            y = rng.permutation(20).astype(float).tolist()
            assert spearman(x, y) == pytest.approx(spearman_np_untied(x, y), abs=1e-12)

    def test_monotone_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=15).tolist()
        y = rng.normal(size=15).tolist()
        base = spearman(x, y)
        assert spearman([math.exp(v) for v in x], y) == pytest.approx(base, abs=1e-12)

    def test_correlation_returns_both(self):
        entropies = [0.0, 0.428, 1.101, 2.065, 3.108]
        f1 = [0.517, 0.460, 0.451, 0.383, 0.378]
        r, rho = correlation(entropies, f1)
        assert r == pytest.approx(-0.9395854243465236, abs=1e-12)
        assert rho == pytest.approx(-1.0, abs=1e-15)
