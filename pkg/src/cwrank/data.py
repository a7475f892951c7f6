"""Dataset loaders, training-set augmentation and ranked-run files.

Three on-disk layouts are understood:

* the shared-task TSV splits (header row with ``topic_id``, ``tweet_id``,
  ``tweet_text`` and ``check_worthiness`` columns; extra columns ignored),
* the PHEME directory tree (per-event ``rumours`` / ``non-rumours``
  conversation folders; only source tweets are read, never replies),
* the Twitter 15 / Twitter 16 layout (``label.txt`` with ``label:tweet_id``
  lines next to ``source_tweets.txt`` with ``tweet_id<TAB>text`` lines).

Everything is normalised to :class:`LabeledTweet` with a binary label
(1 = check-worthy / rumour).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, EmptyDatasetError, ParseError, SchemaError

CLEF_COLUMNS = ("topic_id", "tweet_id", "tweet_text", "check_worthiness")

# Twitter 15/16 come with 4-way veracity tags; everything that is a rumour
# (whatever its veracity) counts as check-worthy here.
TW_LABEL_MAP = {"true": 1, "false": 1, "unverified": 1, "non-rumor": 0}


class Source(str, Enum):
    CLEF = "CLEF"
    PHEME = "PHEME"
    TW15 = "TW15"
    TW16 = "TW16"


class AugmentMode(str, Enum):
    """Which external rows get appended to the base training split."""

    NONE = "NONE"
    PHEME_RUMOURS_ONLY = "PHEME_RUMOURS_ONLY"
    PHEME_ALL = "PHEME_ALL"
    TW1516 = "TW1516"
    PHEME_PLUS_TW1516 = "PHEME_PLUS_TW1516"
    EXTERNAL_ONLY = "EXTERNAL_ONLY"


@dataclass(frozen=True)
class LabeledTweet:
    topic_id: str
    tweet_id: str
    text: str
    label: int
    source: Source

    def __post_init__(self) -> None:
        if not self.tweet_id:
            raise ValueError("tweet_id must be non-empty")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if not self.text.strip():
            raise ValueError("text must be non-empty after trimming")


@dataclass
class PhemeLoad:
    """Result of a PHEME scan: tweets plus a count of skipped conversations."""

    tweets: list[LabeledTweet]
    skipped_conversations: int = 0


@dataclass
class RankedRun:
    """Per-topic ranking: entries sorted by score descending, ties broken by
    ascending tweet_id so output files are deterministic."""

    topic_id: str
    entries: list[tuple[str, float]] = field(default_factory=list)
    run_id: str = "run"

    @classmethod
    def from_scores(
        cls, topic_id: str, pairs: Iterable[tuple[str, float]], run_id: str = "run"
    ) -> "RankedRun":
        ordered = sorted(pairs, key=lambda e: (-e[1], e[0]))
        run = cls(topic_id=topic_id, entries=ordered, run_id=run_id)
        run.validate()
        return run

    def validate(self) -> None:
        seen: set[str] = set()
        prev: tuple[str, float] | None = None
        for tweet_id, score in self.entries:
            if tweet_id in seen:
                raise ValueError(f"duplicate tweet_id in run: {tweet_id}")
            seen.add(tweet_id)
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"score out of [0, 1] for {tweet_id}: {score}")
            if prev is not None:
                if score > prev[1] or (score == prev[1] and tweet_id < prev[0]):
                    raise ValueError("entries not sorted by (score desc, tweet_id asc)")
            prev = (tweet_id, score)


def load_clef_tsv(path: str | Path) -> list[LabeledTweet]:
    """Load one shared-task TSV split, preserving file order.

    Raises SchemaError when a required column is missing, ParseError on a
    non-binary label (with the offending line number), and EmptyDatasetError
    when the file has a header but no data rows.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty") from None
        col = {name.strip(): i for i, name in enumerate(header)}
        for required in CLEF_COLUMNS:
            if required not in col:
                raise SchemaError(f"{path}: missing required column '{required}'")
        tweets: list[LabeledTweet] = []
        seen_ids: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= max(col[c] for c in CLEF_COLUMNS):
                raise ParseError(f"{path}:{lineno}: row has too few columns")
            raw_label = row[col["check_worthiness"]].strip()
            if raw_label not in ("0", "1"):
                raise ParseError(
                    f"{path}:{lineno}: check_worthiness must be 0 or 1, got {raw_label!r}"
                )
            tweet_id = row[col["tweet_id"]].strip()
            if tweet_id in seen_ids:
                raise ParseError(f"{path}:{lineno}: duplicate tweet_id {tweet_id!r}")
            seen_ids.add(tweet_id)
            try:
                tweets.append(
                    LabeledTweet(
                        topic_id=row[col["topic_id"]].strip(),
                        tweet_id=tweet_id,
                        text=row[col["tweet_text"]],
                        label=int(raw_label),
                        source=Source.CLEF,
                    )
                )
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not tweets:
        raise EmptyDatasetError(f"{path}: no data rows")
    return tweets


def _iter_label_dirs(root: Path) -> Iterable[tuple[Path, int]]:
    """Yield (conversation-container dir, label) pairs in deterministic order.

    Accepts either a root that directly contains rumours/non-rumours or the
    usual per-event layout one level down.
    """
    pairs = [("rumours", 1), ("non-rumours", 0)]
    direct = [(root / name, label) for name, label in pairs if (root / name).is_dir()]
    if direct:
        yield from direct
        return
    for event_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for name, label in pairs:
            cand = event_dir / name
            if cand.is_dir():
                yield cand, label


def _read_source_tweet(conv_dir: Path) -> tuple[str, str] | None:
    """Return (tweet_id, text) for a conversation, or None if unrecoverable."""
    for dirname in ("source-tweets", "source-tweet"):
        st_dir = conv_dir / dirname
        if not st_dir.is_dir():
            continue
        for f in sorted(st_dir.glob("*.json")):
            try:
                doc = json.loads(f.read_text(encoding="utf-8", errors="replace"))
            except (json.JSONDecodeError, OSError):
                continue
            text = (doc.get("text") or "").strip()
            if not text:
                continue
            tweet_id = str(doc.get("id") or f.stem)
            return tweet_id, text
    return None


def load_pheme(path: str | Path, rumours_only: bool = False) -> PhemeLoad:
    """Scan a PHEME tree for source tweets (replies are never read).

    Rumour conversations become label 1, non-rumours label 0; with
    ``rumours_only`` the non-rumour folders are not walked at all.
    Conversations without a recoverable source tweet are skipped and counted.
    """
    root = Path(path)
    if not root.is_dir():
        raise OSError(f"{root}: not a readable directory")
    tweets: list[LabeledTweet] = []
    skipped = 0
    seen_ids: set[str] = set()
    for container, label in _iter_label_dirs(root):
        if rumours_only and label == 0:
            continue
        event = container.parent.name if container.parent != root else root.name
        for conv_dir in sorted(p for p in container.iterdir() if p.is_dir()):
            found = _read_source_tweet(conv_dir)
            if found is None:
                skipped += 1
                continue
            tweet_id, text = found
            if tweet_id in seen_ids:
                skipped += 1
                continue
            seen_ids.add(tweet_id)
            tweets.append(
                LabeledTweet(
                    topic_id=event,
                    tweet_id=tweet_id,
                    text=text,
                    label=label,
                    source=Source.PHEME,
                )
            )
    return PhemeLoad(tweets=tweets, skipped_conversations=skipped)


def load_twitter1516(path: str | Path, which: Source | str) -> list[LabeledTweet]:
    """Load a Twitter 15 or Twitter 16 directory (label.txt + source_tweets.txt).

    ``which`` is Source.TW15/Source.TW16 (or the same name as a string, any
    case). The 4-way veracity tags collapse to binary per TW_LABEL_MAP; an
    unknown tag raises ParseError naming the value.
    """
    if isinstance(which, str):
        try:
            which = Source(which.upper())
        except ValueError:
            raise ValueError(f"which must be TW15 or TW16, got {which!r}") from None
    if which not in (Source.TW15, Source.TW16):
        raise ValueError(f"which must be TW15 or TW16, got {which}")
    root = Path(path)
    label_file = root / "label.txt"
    text_file = root / "source_tweets.txt"
    texts: dict[str, str] = {}
    with text_file.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            tweet_id, _, text = line.partition("\t")
            texts[tweet_id.strip()] = text
    tweets: list[LabeledTweet] = []
    seen_ids: set[str] = set()
    with label_file.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            raw_label, _, tweet_id = line.partition(":")
            raw_label = raw_label.strip().lower()
            tweet_id = tweet_id.strip()
            if raw_label not in TW_LABEL_MAP:
                raise ParseError(
                    f"{label_file}:{lineno}: unknown label {raw_label!r} "
                    f"(expected one of {sorted(TW_LABEL_MAP)})"
                )
            text = texts.get(tweet_id, "").strip()
            if not text or tweet_id in seen_ids:
                continue
            seen_ids.add(tweet_id)
            tweets.append(
                LabeledTweet(
                    topic_id=which.value.lower(),
                    tweet_id=tweet_id,
                    text=text,
                    label=TW_LABEL_MAP[raw_label],
                    source=which,
                )
            )
    return tweets


def augment(
    clef_train: Sequence[LabeledTweet],
    policy: AugmentMode,
    pheme: Sequence[LabeledTweet] | None = None,
    tw15: Sequence[LabeledTweet] | None = None,
    tw16: Sequence[LabeledTweet] | None = None,
) -> list[LabeledTweet]:
    """Concatenate the base split with externals per the augmentation policy.

    Output order is fixed: CLEF rows first (omitted under EXTERNAL_ONLY),
    then PHEME, Twitter 15, Twitter 16 — so the training-set order is
    deterministic before any seeded shuffling.
    """
    needs_pheme = policy in (
        AugmentMode.PHEME_RUMOURS_ONLY,
        AugmentMode.PHEME_ALL,
        AugmentMode.PHEME_PLUS_TW1516,
        AugmentMode.EXTERNAL_ONLY,
    )
    needs_tw = policy in (
        AugmentMode.TW1516,
        AugmentMode.PHEME_PLUS_TW1516,
        AugmentMode.EXTERNAL_ONLY,
    )
    if needs_pheme and pheme is None:
        raise ConfigError(f"policy {policy.value} requires the PHEME corpus")
    if needs_tw and (tw15 is None or tw16 is None):
        raise ConfigError(f"policy {policy.value} requires Twitter 15 and Twitter 16")

    out: list[LabeledTweet] = []
    if policy is not AugmentMode.EXTERNAL_ONLY:
        out.extend(clef_train)
    if needs_pheme:
        assert pheme is not None
        if policy is AugmentMode.PHEME_RUMOURS_ONLY:
            out.extend(t for t in pheme if t.label == 1)
        else:
            out.extend(pheme)
    if needs_tw:
        assert tw15 is not None and tw16 is not None
        out.extend(tw15)
        out.extend(tw16)
    return out


def write_predictions(runs: RankedRun | Sequence[RankedRun], path: str | Path) -> None:
    """Write run file lines ``topic_id<TAB>tweet_id<TAB>score<TAB>run_id``.

    Scores use fixed 6-decimal notation; the file always ends with a newline.
    """
    if isinstance(runs, RankedRun):
        runs = [runs]
    for run in runs:
        run.validate()
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for run in runs:
            for tweet_id, score in run.entries:
                fh.write(f"{run.topic_id}\t{tweet_id}\t{score:.6f}\t{run.run_id}\n")


def read_predictions(path: str | Path) -> list[RankedRun]:
    """Parse a run file back into RankedRun objects, grouped by topic in file
    order. Entry order is taken from the file (not re-sorted)."""
    path = Path(path)
    runs: list[RankedRun] = []
    current: RankedRun | None = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 tab-separated fields")
            topic_id, tweet_id, raw_score, run_id = parts
            try:
                score = float(raw_score)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad score {raw_score!r}") from None
            if current is None or current.topic_id != topic_id or current.run_id != run_id:
                current = RankedRun(topic_id=topic_id, entries=[], run_id=run_id)
                runs.append(current)
            current.entries.append((tweet_id, score))
    return runs
