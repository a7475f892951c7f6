"""Shared fixtures: miniature corpora in the published on-disk layouts and a
synthetic full-size dataset for end-to-end runs.

Real-data checks activate when environment variables point at the published
files (CWRANK_CLEF_TRAIN, CWRANK_CLEF_DEV, CWRANK_CLEF_TEST, CWRANK_PHEME_DIR,
CWRANK_TW15_DIR, CWRANK_TW16_DIR); otherwise the bundled miniatures are used.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

CLEF_HEADER = "topic_id\ttweet_id\ttweet_text\tcheck_worthiness"

MINI_CLEF_ROWS = [
    ("covid-19", "1001", "Scientists warn 90% of cases go unreported http://ex.ample/x", 1),
    ("covid-19", "1002", "Good morning everyone, lovely walk today", 0),
    ("covid-19", "1003", "BREAKING: 500 new cases confirmed in the region today", 1),
    ("covid-19", "1004", "I miss going to concerts with @bestfriend", 0),
    ("covid-19", "1005", "#COVID19 deaths doubled in 3 days according to officials", 1),
    ("covid-19", "1006", "my cat just knocked over the plant again", 0),
    ("covid-19", "1007", "Hospital says ICU occupancy hit 97% this week", 1),
    ("covid-19", "1008", "what a sunset tonight, no filter needed", 0),
]


def write_clef_tsv(path: Path, rows=None, header: str = CLEF_HEADER) -> Path:
    rows = MINI_CLEF_ROWS if rows is None else rows
    lines = [header]
    lines += [f"{t}\t{i}\t{x}\t{y}" for t, i, x, y in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def mini_clef(tmp_path: Path) -> Path:
    return write_clef_tsv(tmp_path / "mini_clef.tsv")


def _write_source_tweet(conv_dir: Path, tweet_id: str, text: str) -> None:
    src = conv_dir / "source-tweets"
    src.mkdir(parents=True)
    payload = {"id": int(tweet_id), "id_str": tweet_id, "text": text}
    (src / f"{tweet_id}.json").write_text(json.dumps(payload), encoding="utf-8")


# (event, kind, tweet_id, text); one conversation per entry
MINI_PHEME_PLAN = [
    ("charliehebdo", "rumours", "5001", "Attackers still at large says police source"),
    ("charliehebdo", "rumours", "5002", "Report: hostages taken at the scene"),
    ("charliehebdo", "non-rumours", "5003", "Our thoughts are with everyone in Paris"),
    ("germanwings", "rumours", "5004", "Co-pilot reportedly locked out of cockpit"),
    ("germanwings", "non-rumours", "5005", "Flight tracking shows descent over the Alps"),
    ("germanwings", "non-rumours", "5006", "Press conference scheduled for this afternoon"),
]


@pytest.fixture
def mini_pheme(tmp_path: Path) -> Path:
    """Two events; one extra conversation without a source tweet (must be
    skipped and counted)."""
    root = tmp_path / "pheme"
    for event, kind, tweet_id, text in MINI_PHEME_PLAN:
        conv = root / event / kind / tweet_id
        _write_source_tweet(conv, tweet_id, text)
        (conv / "reactions").mkdir(parents=True, exist_ok=True)
    broken = root / "charliehebdo" / "rumours" / "5099"
    (broken / "reactions").mkdir(parents=True)
    return root


MINI_TW_LABELS = [
    ("true", "7001"),
    ("false", "7002"),
    ("unverified", "7003"),
    ("non-rumor", "7004"),
    ("true", "7005"),
]

MINI_TW_TEXTS = {
    "7001": "celebrity spotted giving away cash downtown",
    "7002": "aliens landed behind the stadium last night",
    "7003": "insider says the merger closes next week",
    "7004": "the bridge reopens after routine maintenance",
    "7005": "vaccine stocks depleted across the county",
}


def write_tw_dir(root: Path, labels=None, texts=None) -> Path:
    labels = MINI_TW_LABELS if labels is None else labels
    texts = MINI_TW_TEXTS if texts is None else texts
    root.mkdir(parents=True, exist_ok=True)
    (root / "label.txt").write_text(
        "".join(f"{tag}:{tid}\n" for tag, tid in labels), encoding="utf-8"
    )
    (root / "source_tweets.txt").write_text(
        "".join(f"{tid}\t{txt}\n" for tid, txt in texts.items()), encoding="utf-8"
    )
    return root


@pytest.fixture
def mini_tw15(tmp_path: Path) -> Path:
    return write_tw_dir(tmp_path / "twitter15")


# --- synthetic full-size splits ----------------------------------------------

_FILLER = (
    "officials said the situation remains calm across the region and residents "
    "continue their usual routines while reporters keep watching closely for "
    "updates from the council about parks schools transport libraries and the "
    "harbour festival planned together next month"
).split()

_CLAIM_PATTERNS = [
    "officials confirm {n} new cases reported in the area",
    "study claims {n}% of patients recover within days",
    "minister says {n} hospitals reached capacity already",
    "report warns {n} staff shortages across clinics now",
]


def synthetic_split(n_rows: int, n_pos: int, seed: int) -> list[tuple[str, str, str, int]]:
    """CLEF-shaped rows where positives carry a numeric expression and
    negatives never do; word choice is otherwise shared between classes."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_rows):
        label = 1 if i < n_pos else 0
        k = int(rng.integers(5, 10))
        words = [_FILLER[int(j)] for j in rng.integers(0, len(_FILLER), size=k)]
        if label:
            pattern = _CLAIM_PATTERNS[int(rng.integers(0, len(_CLAIM_PATTERNS)))]
            insert = pattern.format(n=int(rng.integers(2, 5000)))
            words = insert.split() + words[: max(2, k - 4)]
        text = " ".join(words)
        rows.append(("covid-19", f"{9_000_000 + i}", text, label))
    order = rng.permutation(n_rows)
    return [rows[i] for i in order]


@pytest.fixture(scope="session")
def synthetic_clef_dir(tmp_path_factory) -> Path:
    base = tmp_path_factory.mktemp("synthetic_clef")
    write_clef_tsv(base / "train.tsv", synthetic_split(672, 231, seed=11))
    write_clef_tsv(base / "dev.tsv", synthetic_split(150, 59, seed=12))
    return base
