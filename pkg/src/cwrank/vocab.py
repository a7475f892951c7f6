"""Token ids, sequence framing and per-batch padding.

Ids 0..3 are reserved: [PAD]=0, [UNK]=1, [CLS]=2, [SEP]=3. Every encoded
tweet is framed as [CLS] tokens [SEP]; unknown tokens map to [UNK]. Batches
are padded to the longest sequence within the batch only, with a parallel
0/1 mask (1 = real token).

The persisted vocabulary is a two-column tab-separated file (token, id)
whose first four lines are the reserved tokens in id order.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DegenerateInputError, ParseError

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2
SEP_ID = 3

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"

RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN)


@dataclass
class Vocabulary:
    token_to_id: dict[str, int]
    id_to_token: list[str]
    min_freq: int = 1

    def __len__(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [CLS_ID, *(self.id_of(t) for t in tokens), SEP_ID]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            for i, token in enumerate(self.id_to_token):
                fh.write(f"{token}\t{i}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        id_to_token: list[str] = []
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0]:
                    raise ParseError(f"{path}:{lineno}: expected 'token<TAB>id'")
                token, id_str = parts
                try:
                    token_id = int(id_str)
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: id {id_str!r} is not an integer") from None
                if token_id != len(id_to_token):
                    raise ParseError(
                        f"{path}:{lineno}: ids must be consecutive from 0, got {token_id}"
                    )
                id_to_token.append(token)
        if tuple(id_to_token[:4]) != RESERVED_TOKENS:
            raise ParseError(
                f"{path}: first four entries must be {' '.join(RESERVED_TOKENS)}"
            )
        if len(set(id_to_token)) != len(id_to_token):
            raise ParseError(f"{path}: duplicate token in vocabulary")
        return cls(
            token_to_id={t: i for i, t in enumerate(id_to_token)},
            id_to_token=id_to_token,
        )

    def sha256(self) -> str:
        h = hashlib.sha256()
        for token in self.id_to_token:
            h.update(token.encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()


def build_vocab(token_lists: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
    """Frequency-then-lexicographic vocabulary over preprocessed corpora.

    Reserved ids come first; remaining tokens are ordered by descending
    count, ties alphabetically, so the assignment is deterministic.
    """
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    counts: Counter[str] = Counter()
    n_lists = 0
    for tokens in token_lists:
        n_lists += 1
        counts.update(tokens)
    if n_lists == 0:
        raise DegenerateInputError("cannot build a vocabulary from zero tweets")
    for reserved in RESERVED_TOKENS:
        counts.pop(reserved, None)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    id_to_token = [*RESERVED_TOKENS, *kept]
    return Vocabulary(
        token_to_id={t: i for i, t in enumerate(id_to_token)},
        id_to_token=id_to_token,
        min_freq=min_freq,
    )


@dataclass(frozen=True)
class EncodedTweet:
    """One tweet after id mapping, still carrying its identity and label."""

    ids: tuple[int, ...]
    label: int
    tweet_id: str
    topic_id: str

    def __post_init__(self) -> None:
        if len(self.ids) < 2 or self.ids[0] != CLS_ID or self.ids[-1] != SEP_ID:
            raise ValueError("encoded tweet must be framed as [CLS] ... [SEP]")


@dataclass
class Batch:
    """One padded minibatch.

    ids: (B, L) int64 token ids padded with PAD_ID to the batch max length.
    mask: (B, L) float64, 1.0 for real tokens and 0.0 for padding.
    indices: positions of the batch rows in the source corpus.
    labels: per-row binary labels when the source rows carry them.
    """

    ids: np.ndarray
    mask: np.ndarray
    indices: np.ndarray
    labels: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.ids.shape[0]

    @property
    def length(self) -> int:
        return self.ids.shape[1]


def pad_batch(
    encoded: Sequence[Sequence[int]],
    indices: Sequence[int],
    labels: Sequence[int] | None = None,
) -> Batch:
    if not encoded:
        raise ValueError("empty batch")
    max_len = max(len(seq) for seq in encoded)
    ids = np.full((len(encoded), max_len), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(encoded), max_len), dtype=np.float64)
    for r, seq in enumerate(encoded):
        ids[r, : len(seq)] = seq
        mask[r, : len(seq)] = 1.0
    return Batch(
        ids=ids,
        mask=mask,
        indices=np.asarray(indices, dtype=np.int64),
        labels=None if labels is None else np.asarray(labels, dtype=np.float64),
    )


def make_batches(
    encoded: Sequence[Sequence[int]],
    batch_size: int,
    order: Sequence[int] | None = None,
    labels: Sequence[int] | None = None,
) -> Iterator[Batch]:
    """Slice the corpus into consecutive batches of at most batch_size.

    ``order`` (a permutation of row indices) controls shuffling; callers own
    the RNG. The final short batch is kept.
    """
    if batch_size <= 0:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    if order is None:
        order = range(len(encoded))
    order = list(order)
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        yield pad_batch(
            [encoded[i] for i in idx],
            idx,
            labels=None if labels is None else [labels[i] for i in idx],
        )
