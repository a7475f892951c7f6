"""Segment-aware tweet preprocessing.

A tweet is first split on whitespace and each chunk is typed: URLs, hashtags,
mentions and numeric expressions are recognised inside chunks, everything
else stays a WORD (keeping any attached punctuation, so "France," is one
token) or PUNCT for punctuation-only chunks. A normalization policy then maps
each special segment kind to one of KEEP / REMOVE / SPECIAL_TOKEN / ROOT_MAP.

The canonical special-token spellings use ASCII angle brackets — "<number>",
"<url>", "<account>", "<hashtag>". Typeset output sometimes displays them
with mathematical angle brackets; the ASCII form is the one that enters the
vocabulary.

chi2_scores ranks hashtag / mention strings by how strongly their presence
depends on the class label (2x2 contingency chi-square on binary presence),
which is how candidate terms for manual root consolidation are found.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, DegenerateInputError, ParseError

NUMBER_TOKEN = "<number>"
URL_TOKEN = "<url>"
ACCOUNT_TOKEN = "<account>"
HASHTAG_TOKEN = "<hashtag>"

_URL_RE = re.compile(r"(?:https?://\S+|www\.\S+)", re.IGNORECASE)
_HASHTAG_RE = re.compile(r"#[\w][\w'-]*")
_MENTION_RE = re.compile(r"@\w+")
# Optional '$' prefix and sign, digit groups with ','/'.' and optional '%'.
_NUMERIC_RE = re.compile(r"\$?[+-]?\d+(?:,\d{3})*(?:\.\d+)?%?")
_BARE_DIGITS_RE = re.compile(r"\d+")
_TITLECASE_RE = re.compile(r"[A-Z][a-z]+")
_TRAILING_PUNCT_RE = re.compile(r"[.,;:!?)\]}>\"']+$")

# Scale words that form one numeric expression with a preceding number
# ("50 million" normalises as a single <number>).
MAGNITUDE_WORDS = frozenset({"hundred", "thousand", "million", "billion", "trillion"})

# Characters that glue a digit run to the preceding token ("x-5", "US$50",
# "3.14."); a numeric expression must not start right after one of these.
_NUMERIC_BLOCKERS = set("$+-._")


class SegmentKind(str, Enum):
    WORD = "WORD"
    HASHTAG = "HASHTAG"
    MENTION = "MENTION"
    URL = "URL"
    NUMERIC = "NUMERIC"
    PUNCT = "PUNCT"


class SegmentAction(str, Enum):
    KEEP = "KEEP"
    REMOVE = "REMOVE"
    SPECIAL_TOKEN = "SPECIAL_TOKEN"
    ROOT_MAP = "ROOT_MAP"


SPECIAL_TOKENS: dict[SegmentKind, str] = {
    SegmentKind.NUMERIC: NUMBER_TOKEN,
    SegmentKind.URL: URL_TOKEN,
    SegmentKind.MENTION: ACCOUNT_TOKEN,
    SegmentKind.HASHTAG: HASHTAG_TOKEN,
}


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    raw: str
    span: tuple[int, int]


@dataclass
class ConsolidationMap:
    """Raw segment string -> root replacement.

    Roots are lowercase with no '#'/'@' prefix. A root may contain spaces
    ("corona virus"); it is then emitted as several consecutive tokens.
    """

    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for raw, root in self.entries.items():
            if not root or root != root.lower() or root.lstrip().startswith(("#", "@")):
                raise ValueError(f"invalid root {root!r} for {raw!r}")

    def get(self, raw: str) -> str | None:
        return self.entries.get(raw)

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            for raw, root in self.entries.items():
                fh.write(f"{raw}\t{root}\n")

    @classmethod
    def load(cls, path: str | Path) -> "ConsolidationMap":
        entries: dict[str, str] = {}
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ParseError(f"{path}:{lineno}: expected two tab-separated columns")
                entries[parts[0]] = parts[1]
        return cls(entries=entries)


@dataclass
class PreprocessPolicy:
    """Per-kind treatment of special segments plus the lowercase switch.

    ``consolidation`` must be supplied (possibly empty) whenever any action
    is ROOT_MAP; unmapped segments then fall back to their special token.
    """

    hashtag: SegmentAction = SegmentAction.KEEP
    mention: SegmentAction = SegmentAction.KEEP
    url: SegmentAction = SegmentAction.KEEP
    numeric: SegmentAction = SegmentAction.KEEP
    lowercase: bool = False
    consolidation: ConsolidationMap | None = None

    def action_for(self, kind: SegmentKind) -> SegmentAction:
        return {
            SegmentKind.HASHTAG: self.hashtag,
            SegmentKind.MENTION: self.mention,
            SegmentKind.URL: self.url,
            SegmentKind.NUMERIC: self.numeric,
        }[kind]

    @property
    def uses_root_map(self) -> bool:
        return SegmentAction.ROOT_MAP in (self.hashtag, self.mention, self.url, self.numeric)

    def to_dict(self) -> dict:
        """JSON-friendly form embedded in checkpoints, so predict runs the
        exact training-time preprocessing without external files."""
        return {
            "hashtag": self.hashtag.value,
            "mention": self.mention.value,
            "url": self.url.value,
            "numeric": self.numeric.value,
            "lowercase": self.lowercase,
            "consolidation": None if self.consolidation is None else dict(self.consolidation.entries),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PreprocessPolicy":
        cons = d.get("consolidation")
        return cls(
            hashtag=SegmentAction(d["hashtag"]),
            mention=SegmentAction(d["mention"]),
            url=SegmentAction(d["url"]),
            numeric=SegmentAction(d["numeric"]),
            lowercase=bool(d["lowercase"]),
            consolidation=None if cons is None else ConsolidationMap(entries=dict(cons)),
        )


def _numeric_starts_here(chunk: str, i: int) -> re.Match | None:
    """Numeric expression at position i, unless glued to neighbouring text."""
    if i > 0:
        prev = chunk[i - 1]
        if prev.isalnum() or prev in _NUMERIC_BLOCKERS:
            return None
    m = _NUMERIC_RE.match(chunk, i)
    if m is None:
        return None
    end = m.end()
    if end < len(chunk) and chunk[end].isalpha():
        return None
    return m


def _special_at(chunk: str, i: int) -> tuple[SegmentKind, int] | None:
    """Try to recognise a special segment starting at chunk[i]."""
    prev_ok = i == 0 or not (chunk[i - 1].isalnum() or chunk[i - 1] in "#@")
    if prev_ok:
        m = _URL_RE.match(chunk, i)
        if m:
            matched = _TRAILING_PUNCT_RE.sub("", m.group())
            if len(matched) > len("www."):
                return SegmentKind.URL, i + len(matched)
        if chunk[i] == "#":
            m = _HASHTAG_RE.match(chunk, i)
            if m:
                return SegmentKind.HASHTAG, m.end()
        if chunk[i] == "@":
            m = _MENTION_RE.match(chunk, i)
            if m:
                return SegmentKind.MENTION, m.end()
    m = _numeric_starts_here(chunk, i)
    if m:
        return SegmentKind.NUMERIC, m.end()
    return None


def _segment_chunk(chunk: str, base: int) -> list[Segment]:
    segs: list[Segment] = []
    i = 0
    n = len(chunk)
    while i < n:
        hit = _special_at(chunk, i)
        if hit is not None:
            kind, end = hit
            segs.append(Segment(kind, chunk[i:end], (base + i, base + end)))
            i = end
            continue
        j = i + 1
        while j < n and _special_at(chunk, j) is None:
            j += 1
        raw = chunk[i:j]
        kind = SegmentKind.WORD if any(c.isalnum() for c in raw) else SegmentKind.PUNCT
        segs.append(Segment(kind, raw, (base + i, base + j)))
        i = j
    return segs


def segment(text: str) -> list[Segment]:
    """Split a tweet into typed, non-overlapping segments covering all
    non-whitespace characters in order.

    Digit runs directly following a title-case word ("Corona 19") stay WORD:
    they read as part of a named entity, not as a standalone numeric
    expression. Digits embedded in a token ("COVID19") are WORD as well.
    """
    segs: list[Segment] = []
    for m in re.finditer(r"\S+", text):
        segs.extend(_segment_chunk(m.group(), m.start()))
    for k, seg in enumerate(segs):
        if (
            seg.kind is SegmentKind.NUMERIC
            and _BARE_DIGITS_RE.fullmatch(seg.raw)
            and k > 0
            and segs[k - 1].kind is SegmentKind.WORD
            and _TITLECASE_RE.fullmatch(segs[k - 1].raw)
        ):
            segs[k] = Segment(SegmentKind.WORD, seg.raw, seg.span)
    return segs


def apply_policy(segments: Sequence[Segment], policy: PreprocessPolicy) -> list[str]:
    """Map segments to the final token sequence, preserving order.

    A magnitude word ("million") immediately following a numeric segment that
    was normalised away is absorbed into the numeric expression — "donates 50
    million won" becomes "donates <number> won".
    """
    if policy.uses_root_map and policy.consolidation is None:
        raise ConfigError("policy uses ROOT_MAP but no consolidation map was supplied")
    tokens: list[str] = []
    prev_numeric_transformed = False
    for seg in segments:
        if seg.kind is SegmentKind.WORD:
            if prev_numeric_transformed and seg.raw.lower() in MAGNITUDE_WORDS:
                prev_numeric_transformed = False
                continue
            tokens.append(seg.raw.lower() if policy.lowercase else seg.raw)
            prev_numeric_transformed = False
            continue
        if seg.kind is SegmentKind.PUNCT:
            tokens.append(seg.raw)
            prev_numeric_transformed = False
            continue
        action = policy.action_for(seg.kind)
        if seg.kind is SegmentKind.NUMERIC:
            prev_numeric_transformed = action is not SegmentAction.KEEP
        else:
            prev_numeric_transformed = False
        if action is SegmentAction.KEEP:
            tokens.append(seg.raw)
        elif action is SegmentAction.REMOVE:
            continue
        elif action is SegmentAction.SPECIAL_TOKEN:
            tokens.append(SPECIAL_TOKENS[seg.kind])
        else:  # ROOT_MAP
            assert policy.consolidation is not None
            root = policy.consolidation.get(seg.raw)
            if root is None:
                tokens.append(SPECIAL_TOKENS[seg.kind])
            else:
                tokens.extend(root.split())
    return tokens


@dataclass(frozen=True)
class Chi2Entry:
    """2x2 contingency counts for one term.

    a: positive tweets containing the term, b: positive without it,
    c: negative containing it, d: negative without it.
    """

    a: int
    b: int
    c: int
    d: int
    score: float


@dataclass
class Chi2Table:
    n: int
    entries: dict[str, Chi2Entry]

    def export_tsv(self, path: str | Path) -> None:
        ranked = rank_terms(self)
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("segment\tA\tB\tC\tD\tscore\n")
            for term, score in ranked:
                e = self.entries[term]
                fh.write(f"{term}\t{e.a}\t{e.b}\t{e.c}\t{e.d}\t{score:.6f}\n")


def _chi2_score(a: int, b: int, c: int, d: int) -> float:
    n = a + b + c + d
    denom = (a + c) * (b + d) * (a + b) * (c + d)
    if denom == 0:
        return 0.0
    num = a * d - c * b
    return n * num * num / denom


def chi2_scores(tweets: Sequence[Sequence[Segment]], labels: Sequence[int]) -> Chi2Table:
    """Score every distinct hashtag / mention string by class dependence.

    Presence is binary per tweet (term frequency within a tweet is ignored).
    Raises DegenerateInputError unless both classes are represented.
    """
    if len(tweets) != len(labels):
        raise ValueError("tweets and labels must have equal length")
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError("chi2 needs at least one tweet per class")
    containing: dict[str, list[int]] = {}
    for segs, y in zip(tweets, labels):
        terms = {s.raw for s in segs if s.kind in (SegmentKind.HASHTAG, SegmentKind.MENTION)}
        for term in terms:
            counts = containing.setdefault(term, [0, 0])
            counts[y] += 1
    entries: dict[str, Chi2Entry] = {}
    for term, (c_neg, c_pos) in containing.items():
        a, b = c_pos, n_pos - c_pos
        c, d = c_neg, n_neg - c_neg
        entries[term] = Chi2Entry(a=a, b=b, c=c, d=d, score=_chi2_score(a, b, c, d))
    return Chi2Table(n=len(labels), entries=entries)


def rank_terms(table: Chi2Table) -> list[tuple[str, float]]:
    """All terms sorted score-descending, ties broken lexicographically."""
    return sorted(
        ((term, e.score) for term, e in table.entries.items()),
        key=lambda kv: (-kv[1], kv[0]),
    )


def propose_consolidation(table: Chi2Table, top_k: int) -> list[tuple[str, float]]:
    """Top-k candidate terms for manual root consolidation.

    The actual raw -> root mapping stays a human decision; this only surfaces
    the terms whose presence depends most on the class.
    """
    if top_k <= 0:
        raise ValueError(f"top_k must be positive, got {top_k}")
    return rank_terms(table)[:top_k]


def preprocess_texts(
    texts: Iterable[str], policy: PreprocessPolicy
) -> list[list[str]]:
    """Convenience: segment + apply_policy over a corpus."""
    return [apply_policy(segment(t), policy) for t in texts]
