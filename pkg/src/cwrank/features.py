"""Embedding providers and TF-IDF features.

Three ways to turn a padded id batch into the B x L x D tensor the
convolution consumes: a trainable table learned with the model, a frozen
table loaded from a static-vector text file (a stand-in for contextual
encoder features, so published scores obtained with those encoders are
reference points rather than targets), and the trainable table paired with a
per-tweet TF-IDF vector that joins the pooled features before the dense
layer.

The PAD row of every table is all zeros and never receives gradient.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateInputError, ParseError
from .vocab import PAD_ID, Vocabulary

UNK_ENTRY = "<unk>"

TRAINABLE_DEFAULT_DIM = 64
TRAINABLE_INIT_SCALE = 0.05


class ProviderKind(str, Enum):
    TRAINABLE = "TRAINABLE"
    PRECOMPUTED = "PRECOMPUTED"
    TFIDF_CONCAT = "TFIDF_CONCAT"


def load_embedding_file(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Parse a static-vector file: header `count dim`, then one
    `token f_1 ... f_dim` line per token. An `<unk>` entry is mandatory
    (it backs every vocabulary token the file does not cover).
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ParseError(f"{path}:1: expected header '<count> <dim>'")
        count, dim = int(parts[0]), int(parts[1])
        if dim <= 0:
            raise ParseError(f"{path}:1: dimension must be positive")
        table: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != dim + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected 1 token + {dim} floats, got {len(fields)} fields"
                )
            token = fields[0]
            if token in table:
                raise ParseError(f"{path}:{lineno}: duplicate token {token!r}")
            try:
                vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if not np.all(np.isfinite(vec)):
                raise ParseError(f"{path}:{lineno}: non-finite value")
            table[token] = vec
    if len(table) != count:
        raise ParseError(f"{path}: header says {count} vectors, file has {len(table)}")
    if UNK_ENTRY not in table:
        raise ConfigError(f"{path}: no {UNK_ENTRY!r} entry; cannot back off unknown tokens")
    return table, dim


def save_embedding_file(table: Mapping[str, np.ndarray], dim: int, path: str | Path) -> None:
    if UNK_ENTRY not in table:
        raise ConfigError(f"refusing to write an embedding file without {UNK_ENTRY!r}")
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(table)} {dim}\n")
        for token, vec in table.items():
            if len(vec) != dim:
                raise ConfigError(f"vector for {token!r} has length {len(vec)}, expected {dim}")
            fh.write(token + " " + " ".join(f"{v:.8e}" for v in vec) + "\n")


@dataclass
class TfIdfModel:
    """Smoothed idf fit on the training split only.

    idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1, so unseen terms (df = 0)
    get the largest value and every idf is >= 1.
    """

    document_frequency: dict[str, int]
    n_docs: int

    def idf(self, term: str) -> float:
        df = self.document_frequency.get(term, 0)
        return math.log((1 + self.n_docs) / (1 + df)) + 1.0


def tfidf_fit(corpus: Sequence[Sequence[str]]) -> TfIdfModel:
    if len(corpus) == 0:
        raise DegenerateInputError("cannot fit TF-IDF on an empty corpus")
    df: Counter[str] = Counter()
    for tokens in corpus:
        df.update(set(tokens))
    return TfIdfModel(document_frequency=dict(df), n_docs=len(corpus))


def tfidf_vector(
    tokens: Sequence[str], model: TfIdfModel, vocab_terms: Sequence[str]
) -> np.ndarray:
    """Tweet-level tf*idf over a fixed term axis, L2-normalized when nonzero."""
    tf = Counter(tokens)
    vec = np.array(
        [tf[t] * model.idf(t) if t in tf else 0.0 for t in vocab_terms],
        dtype=np.float64,
    )
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


@dataclass
class Provider:
    """Resolved embedding source for one training/prediction run.

    For TRAINABLE and TFIDF_CONCAT the table itself lives in ModelParams (the
    optimizer owns it); PRECOMPUTED carries its frozen id-indexed matrix here.
    """

    kind: ProviderKind
    dim: int
    init_scale: float = TRAINABLE_INIT_SCALE
    frozen_matrix: np.ndarray | None = None
    tfidf: TfIdfModel | None = None
    tfidf_terms: list[str] = field(default_factory=list)
    source_path: str | None = None

    @property
    def trainable(self) -> bool:
        return self.kind is not ProviderKind.PRECOMPUTED

    @property
    def extra_dim(self) -> int:
        return len(self.tfidf_terms) if self.kind is ProviderKind.TFIDF_CONCAT else 0

    def init_table(self, vocab_size: int, rng: np.random.Generator) -> np.ndarray | None:
        """Fresh trainable table, PAD row zeroed; None for PRECOMPUTED."""
        if not self.trainable:
            return None
        table = rng.uniform(-self.init_scale, self.init_scale, size=(vocab_size, self.dim))
        table[PAD_ID] = 0.0
        return table

    def embed(self, ids: np.ndarray, table: np.ndarray | None) -> np.ndarray:
        if self.kind is ProviderKind.PRECOMPUTED:
            assert self.frozen_matrix is not None
            return self.frozen_matrix[ids]
        if table is None:
            raise ConfigError("trainable provider needs the embedding table from ModelParams")
        return table[ids]

    def extra_features(self, token_lists: Sequence[Sequence[str]]) -> np.ndarray | None:
        """Per-tweet TF-IDF rows for TFIDF_CONCAT, None otherwise."""
        if self.kind is not ProviderKind.TFIDF_CONCAT:
            return None
        assert self.tfidf is not None
        return np.stack([tfidf_vector(t, self.tfidf, self.tfidf_terms) for t in token_lists])

    def describe(self) -> dict:
        """Checkpoint-header description; enough to rebuild at predict time."""
        desc: dict = {"kind": self.kind.value, "dim": self.dim}
        if self.kind is ProviderKind.TRAINABLE:
            desc["init_scale"] = self.init_scale
        if self.kind is ProviderKind.PRECOMPUTED:
            desc["source_path"] = self.source_path
        if self.kind is ProviderKind.TFIDF_CONCAT:
            desc["init_scale"] = self.init_scale
            desc["tfidf_terms"] = len(self.tfidf_terms)
        return desc


def trainable_provider(
    dim: int = TRAINABLE_DEFAULT_DIM, init_scale: float = TRAINABLE_INIT_SCALE
) -> Provider:
    if dim <= 0:
        raise ConfigError(f"embedding dim must be positive, got {dim}")
    return Provider(kind=ProviderKind.TRAINABLE, dim=dim, init_scale=init_scale)


def precomputed_provider(path: str | Path, vocabulary: Vocabulary) -> Provider:
    """Frozen id-indexed matrix: vocabulary tokens found in the file keep
    their stored vectors bit-identically, missing tokens back off to the
    file's <unk> vector, PAD stays zero.
    """
    table, dim = load_embedding_file(path)
    unk = table[UNK_ENTRY]
    matrix = np.empty((len(vocabulary), dim), dtype=np.float64)
    for i, token in enumerate(vocabulary.id_to_token):
        matrix[i] = table.get(token, unk)
    matrix[PAD_ID] = 0.0
    return Provider(
        kind=ProviderKind.PRECOMPUTED,
        dim=dim,
        frozen_matrix=matrix,
        source_path=str(path),
    )


def tfidf_concat_provider(
    corpus_tokens: Sequence[Sequence[str]],
    vocabulary: Vocabulary,
    dim: int = TRAINABLE_DEFAULT_DIM,
    init_scale: float = TRAINABLE_INIT_SCALE,
) -> Provider:
    """Trainable base + TF-IDF side features fit on the training corpus.

    The term axis is the non-reserved vocabulary in id order, so the feature
    layout is reproducible from the persisted vocabulary alone.
    """
    model = tfidf_fit(corpus_tokens)
    terms = vocabulary.id_to_token[4:]
    return Provider(
        kind=ProviderKind.TFIDF_CONCAT,
        dim=dim,
        init_scale=init_scale,
        tfidf=model,
        tfidf_terms=list(terms),
    )


@dataclass(frozen=True)
class ProviderPlan:
    """Deferred provider construction.

    PRECOMPUTED matrices and TF-IDF statistics both depend on the
    vocabulary, which only exists after the training split is preprocessed,
    so callers state intent here and ``build`` finishes the job.
    """

    kind: ProviderKind
    dim: int = TRAINABLE_DEFAULT_DIM
    init_scale: float = TRAINABLE_INIT_SCALE
    embeddings_path: str | None = None

    def build(
        self, vocabulary: Vocabulary, train_tokens: Sequence[Sequence[str]]
    ) -> Provider:
        if self.kind is ProviderKind.TRAINABLE:
            return trainable_provider(self.dim, self.init_scale)
        if self.kind is ProviderKind.PRECOMPUTED:
            if self.embeddings_path is None:
                raise ConfigError("PRECOMPUTED provider needs an embeddings file path")
            return precomputed_provider(self.embeddings_path, vocabulary)
        return tfidf_concat_provider(
            train_tokens, vocabulary, dim=self.dim, init_scale=self.init_scale
        )


def scatter_embedding_grad(
    ids: np.ndarray, demb: np.ndarray, vocab_size: int
) -> np.ndarray:
    """Accumulate per-position embedding gradients into table rows.

    Rows never looked up stay exactly zero; the PAD row is forced to zero so
    the all-zeros PAD vector is preserved under any optimizer.
    """
    dtable = np.zeros((vocab_size, demb.shape[-1]), dtype=np.float64)
    np.add.at(dtable, ids.reshape(-1), demb.reshape(-1, demb.shape[-1]))
    dtable[PAD_ID] = 0.0
    return dtable
