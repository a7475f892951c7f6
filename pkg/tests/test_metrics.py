"""Ranking metrics against a brute-force definitional oracle."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwrank import (
    Judged,
    RankedRun,
    UndefinedMetricError,
    average_precision,
    format_metrics_row,
    judge_run,
    mean_average_precision,
    metrics_row,
    precision_at_k,
    r_precision,
)
from cwrank.metrics import REPORT_KS


def oracle_average_precision(relevance, pool_positives):
    """Sum of precision at each hit rank, divided by the pool size."""
    total = 0.0
    hits = 0
    for i, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            total += hits / i
    return total / pool_positives


def oracle_precision_at_k(relevance, k):
    return sum(relevance[:k]) / k


def judged(relevance, pool=None):
    if pool is None:
        pool = sum(relevance)
    return Judged(relevance=tuple(relevance), pool_positives=pool)


class TestJudged:
    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            Judged(relevance=(0, 2), pool_positives=1)

    def test_more_hits_than_pool_rejected(self):
        with pytest.raises(ValueError):
            Judged(relevance=(1, 1), pool_positives=1)

    def test_pool_may_exceed_returned_hits(self):
        j = judged([1, 0], pool=5)
        assert j.pool_positives == 5


class TestAveragePrecision:
    def test_worked_example(self):
        assert average_precision(judged([1, 0, 1])) == pytest.approx(0.833333, abs=1e-6)

    def test_single_miss_then_hit(self):
        assert average_precision(judged([0, 1])) == pytest.approx(0.5)

    def test_all_relevant_first_is_one(self):
        assert average_precision(judged([1, 1, 0, 0])) == pytest.approx(1.0)

    def test_unretrieved_positive_penalizes(self):
        # one positive returned, one still in the pool
        assert average_precision(judged([1, 0], pool=2)) == pytest.approx(0.5)

    def test_no_positives_undefined(self):
        with pytest.raises(UndefinedMetricError):
            average_precision(judged([0, 0], pool=0))

    @given(
        st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=30),
        st.integers(min_value=0, max_value=10),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_oracle_and_bounds(self, relevance, extra_pool):
        pool = sum(relevance) + extra_pool
        if pool == 0:
            return
        ap = average_precision(judged(relevance, pool=pool))
        assert ap == pytest.approx(oracle_average_precision(relevance, pool), abs=1e-12)
        assert 0.0 <= ap <= 1.0

    @given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=20))
    @settings(max_examples=120, deadline=None)
    def test_perfect_iff_positives_lead(self, relevance):
        pool = sum(relevance)
        if pool == 0:
            return
        ap = average_precision(judged(relevance, pool=pool))
        positives_lead = all(relevance[i] == 1 for i in range(pool))
        assert (ap == pytest.approx(1.0)) == positives_lead


class TestPrecisionAtK:
    def test_k_beyond_list_counts_misses(self):
        assert precision_at_k(judged([1]), 5) == pytest.approx(0.2)

    def test_plain_case(self):
        assert precision_at_k(judged([1, 0, 1, 0]), 3) == pytest.approx(2 / 3)

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            precision_at_k(judged([1]), 0)

    def test_k_negative_rejected(self):
        with pytest.raises(ValueError):
            precision_at_k(judged([1]), -2)


class TestRPrecision:
    def test_equals_precision_at_pool_size(self):
        j = judged([1, 0, 1, 1], pool=3)
        assert r_precision(j) == pytest.approx(2 / 3)

    def test_truncated_run_counts_misses(self):
        j = judged([1], pool=3)
        assert r_precision(j) == pytest.approx(1 / 3)

    def test_zero_pool_undefined(self):
        with pytest.raises(UndefinedMetricError):
            r_precision(judged([0], pool=0))


class TestMeanAveragePrecision:
    def test_mean_over_topics(self):
        topics = [judged([1, 0, 1]), judged([0, 1])]
        expected = (0.833333333333 + 0.5) / 2
        assert mean_average_precision(topics) == pytest.approx(expected)

    def test_empty_undefined(self):
        with pytest.raises(UndefinedMetricError):
            mean_average_precision([])


class TestJudgeRun:
    def _run(self):
        entries = [("30", 0.9), ("10", 0.5), ("20", 0.1)]
        return RankedRun(topic_id="covid", entries=entries, run_id="m2")

    def test_relevance_follows_rank_order(self):
        gold = {("covid", "30"): 1, ("covid", "10"): 0, ("covid", "20"): 1}
        j = judge_run(self._run(), gold)
        assert j.relevance == (1, 0, 1)
        assert j.pool_positives == 2

    def test_pool_counts_unreturned_gold_positives(self):
        gold = {
            ("covid", "30"): 1,
            ("covid", "10"): 0,
            ("covid", "20"): 1,
            ("covid", "99"): 1,
        }
        j = judge_run(self._run(), gold)
        assert j.pool_positives == 3
        assert average_precision(j) == pytest.approx((1 + 2 / 3) / 3)

    def test_unjudged_entry_counts_non_relevant(self):
        gold = {("covid", "30"): 1, ("covid", "99"): 1}
        j = judge_run(self._run(), gold)
        assert j.relevance == (1, 0, 0)

    def test_other_topics_ignored(self):
        gold = {("covid", "30"): 1, ("5g", "30"): 1, ("5g", "77"): 1}
        j = judge_run(self._run(), gold)
        assert j.pool_positives == 1

    def test_no_positives_for_topic(self):
        gold = {("covid", "30"): 0}
        j = judge_run(self._run(), gold)
        assert j.pool_positives == 0
        with pytest.raises(UndefinedMetricError):
            average_precision(j)


class TestMetricsRow:
    def test_single_topic_values(self):
        row = metrics_row([judged([1, 0, 1])])
        assert row["MAP"] == pytest.approx(0.833333, abs=1e-6)
        assert row["P@1"] == pytest.approx(1.0)
        assert row["P@3"] == pytest.approx(2 / 3)
        assert row["P@50"] == pytest.approx(2 / 50)
        assert row["R-P"] == pytest.approx(0.5)

    def test_reported_ks(self):
        assert REPORT_KS == (1, 3, 5, 10, 20, 50)
        row = metrics_row([judged([1])])
        for k in REPORT_KS:
            assert f"P@{k}" in row

    def test_format_golden(self):
        text = format_metrics_row(metrics_row([judged([1])]))
        lines = text.splitlines()
        assert lines[0].split("\t") == ["MAP", "R-P", "P@1", "P@3", "P@5", "P@10", "P@20", "P@50"]
        assert lines[1].split("\t")[0] == "1.0000"
        assert lines[1].split("\t")[2] == "1.0000"

    def test_averaged_across_topics(self):
        row = metrics_row([judged([1]), judged([0, 1])])
        assert row["MAP"] == pytest.approx(0.75)
        assert row["P@1"] == pytest.approx(0.5)


class TestRandomizedOracle:
    def test_many_random_rankings(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(1, 13))
            relevance = rng.integers(0, 2, size=n).tolist()
            pool = sum(relevance) + int(rng.integers(0, 3))
            if pool == 0:
                continue
            j = judged(relevance, pool=pool)
            assert average_precision(j) == pytest.approx(
                oracle_average_precision(relevance, pool), abs=1e-12
            )
            for k in REPORT_KS:
                assert precision_at_k(j, k) == pytest.approx(
                    oracle_precision_at_k(relevance, k), abs=1e-12
                )
            assert r_precision(j) == pytest.approx(
                oracle_precision_at_k(relevance, pool), abs=1e-12
            )
