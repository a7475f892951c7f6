"""Ranking quality measures: Average Precision / MAP, P@k, R-precision.

All functions consume a Judged view of a RankedRun: the run's entries in
rank order mapped to binary relevance, plus R, the number of positives in
the whole judged pool. R comes from the gold labels, never from the run, so
relevant tweets a run failed to retrieve still count against it (their AP
contribution is 0) and R-precision always uses the true pool depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .data import RankedRun
from .errors import UndefinedMetricError

REPORT_KS = (1, 3, 5, 10, 20, 50)


@dataclass(frozen=True)
class Judged:
    """Relevance of one run's entries, rank order, plus the pool size R."""

    relevance: tuple[int, ...]
    pool_positives: int

    def __post_init__(self) -> None:
        if any(r not in (0, 1) for r in self.relevance):
            raise ValueError("relevance values must be binary")
        if self.pool_positives < 0:
            raise ValueError("pool_positives must be >= 0")
        if sum(self.relevance) > self.pool_positives:
            raise ValueError(
                f"run contains {sum(self.relevance)} relevant entries but the "
                f"pool only has {self.pool_positives}"
            )


def judge_run(run: RankedRun, gold: Mapping[tuple[str, str], int]) -> Judged:
    """Align a run against gold labels keyed by (topic_id, tweet_id).

    Every gold positive for the topic counts toward R whether or not the
    run retrieved it; run entries missing from gold are treated as
    non-relevant.
    """
    relevance = tuple(
        gold.get((run.topic_id, tweet_id), 0) for tweet_id, _ in run.entries
    )
    pool_r = sum(
        label for (topic, _), label in gold.items() if topic == run.topic_id
    )
    return Judged(relevance=relevance, pool_positives=pool_r)


def average_precision(judged: Judged) -> float:
    """AP = (1/R) * sum over relevant ranks i of P@i."""
    if judged.pool_positives == 0:
        raise UndefinedMetricError("average precision undefined with zero pool positives")
    hits = 0
    total = 0.0
    for i, rel in enumerate(judged.relevance, start=1):
        if rel:
            hits += 1
            total += hits / i
    return total / judged.pool_positives


def mean_average_precision(runs: Sequence[Judged]) -> float:
    if len(runs) == 0:
        raise UndefinedMetricError("MAP over zero topics is undefined")
    return sum(average_precision(j) for j in runs) / len(runs)


def precision_at_k(judged: Judged, k: int) -> float:
    """Relevant count among the first k ranks over k; ranks past the end of
    the run count as non-relevant."""
    if k <= 0:
        raise ValueError(f"k must be >= 1, got {k}")
    return sum(judged.relevance[:k]) / k


def r_precision(judged: Judged) -> float:
    if judged.pool_positives == 0:
        raise UndefinedMetricError("R-precision undefined with zero pool positives")
    return sum(judged.relevance[: judged.pool_positives]) / judged.pool_positives


def metrics_row(runs: Sequence[Judged]) -> dict[str, float]:
    """The report row: MAP, R-precision and P@k for k in 1/3/5/10/20/50,
    each averaged over topics."""
    if len(runs) == 0:
        raise UndefinedMetricError("no topics to evaluate")
    row = {
        "MAP": mean_average_precision(runs),
        "R-P": sum(r_precision(j) for j in runs) / len(runs),
    }
    for k in REPORT_KS:
        row[f"P@{k}"] = sum(precision_at_k(j, k) for j in runs) / len(runs)
    return row


def format_metrics_row(row: Mapping[str, float]) -> str:
    """Tab-separated header + value lines (the evaluate command's output)."""
    keys = ["MAP", "R-P", *(f"P@{k}" for k in REPORT_KS)]
    header = "\t".join(keys)
    values = "\t".join(f"{row[k]:.4f}" for k in keys)
    return header + "\n" + values
