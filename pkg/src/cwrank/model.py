"""The sentence classifier: parallel 1-D convolutions, masked max-over-time
pooling and a sigmoid dense head, with hand-derived backward passes and a
deterministic binary checkpoint format.

Each filter width runs as its own bank of 32 filters over the embedding
sequence; per-filter max pooling over the windows that contain no padding
yields one feature per filter; pooled features from all widths (plus an
optional per-tweet side vector) pass through a single dense unit and a
sigmoid. Ranking uses the raw probability.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import kernels
from .data import LabeledTweet, RankedRun
from .errors import (
    BatchTooShortError,
    ConfigError,
    InternalConsistencyError,
    ParseError,
)
from .features import Provider, scatter_embedding_grad
from .vocab import Batch, Vocabulary, make_batches

FILTERS_PER_WIDTH = 32

CHECKPOINT_MAGIC = b"CWRANK1\n"


@dataclass(frozen=True)
class ModelConfig:
    filter_widths: tuple[int, ...]
    filters_per_width: int = FILTERS_PER_WIDTH
    embed_dim: int = 64
    seed: int = 0
    extra_dim: int = 0

    def __post_init__(self) -> None:
        if not self.filter_widths:
            raise ConfigError("at least one filter width required")
        if any(w <= 0 for w in self.filter_widths):
            raise ConfigError(f"filter widths must be positive: {self.filter_widths}")
        if len(set(self.filter_widths)) != len(self.filter_widths):
            raise ConfigError(f"duplicate filter widths: {self.filter_widths}")
        if self.filters_per_width <= 0 or self.embed_dim <= 0 or self.extra_dim < 0:
            raise ConfigError("filters_per_width/embed_dim must be positive, extra_dim >= 0")
        object.__setattr__(self, "filter_widths", tuple(sorted(self.filter_widths)))

    @property
    def pooled_dim(self) -> int:
        return self.filters_per_width * len(self.filter_widths)

    @property
    def dense_in_dim(self) -> int:
        return self.pooled_dim + self.extra_dim

    def to_dict(self) -> dict:
        return {
            "filter_widths": list(self.filter_widths),
            "filters_per_width": self.filters_per_width,
            "embed_dim": self.embed_dim,
            "seed": self.seed,
            "extra_dim": self.extra_dim,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelConfig":
        return cls(
            filter_widths=tuple(d["filter_widths"]),
            filters_per_width=int(d["filters_per_width"]),
            embed_dim=int(d["embed_dim"]),
            seed=int(d["seed"]),
            extra_dim=int(d["extra_dim"]),
        )


@dataclass
class ModelParams:
    """All trainable tensors. ``embedding`` is present only when the
    provider is trainable; it then updates with everything else."""

    filters: dict[int, np.ndarray]
    conv_bias: dict[int, np.ndarray]
    dense_w: np.ndarray
    dense_b: np.ndarray
    embedding: np.ndarray | None = None

    def named_tensors(self) -> dict[str, np.ndarray]:
        """Stable name -> array mapping (shared references, not copies)."""
        out: dict[str, np.ndarray] = {}
        for w in sorted(self.filters):
            out[f"filters.w{w}"] = self.filters[w]
            out[f"conv_bias.w{w}"] = self.conv_bias[w]
        out["dense_w"] = self.dense_w
        out["dense_b"] = self.dense_b
        if self.embedding is not None:
            out["embedding"] = self.embedding
        return out

    def check_finite(self) -> bool:
        return all(np.all(np.isfinite(t)) for t in self.named_tensors().values())

    def copy(self) -> "ModelParams":
        return ModelParams(
            filters={w: f.copy() for w, f in self.filters.items()},
            conv_bias={w: b.copy() for w, b in self.conv_bias.items()},
            dense_w=self.dense_w.copy(),
            dense_b=self.dense_b.copy(),
            embedding=None if self.embedding is None else self.embedding.copy(),
        )


def init_params(
    config: ModelConfig, provider: Provider, vocab_size: int | None = None
) -> ModelParams:
    """Seeded Glorot-uniform filters and dense weights, zero biases.

    Draw order is fixed (embedding table first, then filters by ascending
    width, then dense) so a seed pins every tensor bit-for-bit.
    """
    rng = np.random.default_rng(config.seed)
    embedding = None
    if provider.trainable:
        if vocab_size is None:
            raise ConfigError("trainable provider needs the vocabulary size")
        embedding = provider.init_table(vocab_size, rng)
    filters: dict[int, np.ndarray] = {}
    conv_bias: dict[int, np.ndarray] = {}
    F, D = config.filters_per_width, config.embed_dim
    for w in config.filter_widths:
        bound = np.sqrt(6.0 / (w * D + F))
        filters[w] = rng.uniform(-bound, bound, size=(F, w, D))
        conv_bias[w] = np.zeros(F, dtype=np.float64)
    k = config.dense_in_dim
    bound = np.sqrt(6.0 / (k + 1))
    dense_w = rng.uniform(-bound, bound, size=k)
    dense_b = np.zeros(1, dtype=np.float64)
    return ModelParams(
        filters=filters,
        conv_bias=conv_bias,
        dense_w=dense_w,
        dense_b=dense_b,
        embedding=embedding,
    )


@dataclass
class ForwardTrace:
    """Activations the backward pass needs, captured per forward call."""

    emb: np.ndarray
    dense_in: np.ndarray
    probs: np.ndarray
    argmax: dict[int, np.ndarray]
    gate: dict[int, np.ndarray]
    widths: tuple[int, ...]
    extra_dim: int


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def forward(
    batch: Batch,
    emb: np.ndarray,
    params: ModelParams,
    config: ModelConfig,
    extra: np.ndarray | None = None,
) -> tuple[np.ndarray, ForwardTrace]:
    """Probabilities for one padded batch.

    Pooling considers only windows made entirely of real tokens, so added
    padding columns can never change a probability. A row shorter than some
    width contributes 0 for that bank (no valid window); the whole batch
    being shorter than a width is an error.
    """
    B, L = batch.ids.shape
    if emb.shape[:2] != (B, L) or emb.shape[2] != config.embed_dim:
        raise InternalConsistencyError(
            f"embedding tensor {emb.shape} does not match batch ({B},{L}) x dim {config.embed_dim}"
        )
    for w in config.filter_widths:
        if L < w:
            raise BatchTooShortError(
                f"padded batch length {L} is shorter than filter width {w}"
            )
    lengths = batch.mask.sum(axis=1).astype(np.int64)
    pooled_blocks: list[np.ndarray] = []
    argmax: dict[int, np.ndarray] = {}
    gate: dict[int, np.ndarray] = {}
    F = config.filters_per_width
    for w in config.filter_widths:
        act = kernels.conv1d_forward(emb, params.filters[w], params.conv_bias[w])
        relu = np.maximum(act, 0.0)
        P = L - w + 1
        # window p is PAD-free iff p + w <= true length (padding is a suffix)
        positions = np.arange(P)
        valid = positions[None, :] < (lengths - w + 1)[:, None]
        masked = np.where(valid[:, :, None], relu, -np.inf)
        best = masked.max(axis=1)
        best_idx = masked.argmax(axis=1)
        has_window = valid.any(axis=1)
        pooled = np.where(has_window[:, None], np.maximum(best, 0.0), 0.0)
        g = pooled > 0.0
        argmax[w] = np.where(g, best_idx, -1).astype(np.int64)
        gate[w] = g
        pooled_blocks.append(pooled)
    dense_in = np.concatenate(pooled_blocks, axis=1)
    if config.extra_dim:
        if extra is None or extra.shape != (B, config.extra_dim):
            raise InternalConsistencyError(
                f"expected extra features of shape ({B},{config.extra_dim})"
            )
        dense_in = np.concatenate([dense_in, extra], axis=1)
    elif extra is not None:
        raise InternalConsistencyError("extra features supplied to a model without extra_dim")
    logits = dense_in @ params.dense_w + params.dense_b[0]
    probs = _sigmoid(logits)
    trace = ForwardTrace(
        emb=emb,
        dense_in=dense_in,
        probs=probs,
        argmax=argmax,
        gate=gate,
        widths=config.filter_widths,
        extra_dim=config.extra_dim,
    )
    return probs, trace


def backward(
    trace: ForwardTrace,
    batch: Batch,
    params: ModelParams,
    config: ModelConfig,
    dprobs: np.ndarray,
) -> dict[str, np.ndarray]:
    """Exact loss gradients for every tensor in ``params``.

    Max pooling routes gradient only to each filter's argmax window; the
    ReLU gate is folded into the routes (zero-pooled filters send nothing).
    Embedding gradients are scattered into table rows when the table is
    trainable.
    """
    B = trace.probs.shape[0]
    if dprobs.shape != (B,):
        raise InternalConsistencyError(
            f"loss gradient shape {dprobs.shape} does not match batch size {B}"
        )
    if trace.widths != config.filter_widths:
        raise InternalConsistencyError("trace does not match model config")
    dlogit = dprobs * trace.probs * (1.0 - trace.probs)
    grads: dict[str, np.ndarray] = {}
    grads["dense_w"] = trace.dense_in.T @ dlogit
    grads["dense_b"] = np.array([dlogit.sum()])
    ddense_in = np.outer(dlogit, params.dense_w)
    F = config.filters_per_width
    demb = np.zeros_like(trace.emb)
    for i, w in enumerate(config.filter_widths):
        dpooled = ddense_in[:, i * F : (i + 1) * F]
        routed = trace.gate[w] & (dpooled != 0.0)
        b_idx, f_idx = np.nonzero(routed)
        p_idx = trace.argmax[w][b_idx, f_idx]
        gvals = dpooled[b_idx, f_idx]
        dfilters, demb_w = kernels.conv1d_backward(
            trace.emb, params.filters[w], b_idx, p_idx, f_idx, gvals
        )
        grads[f"filters.w{w}"] = dfilters
        grads[f"conv_bias.w{w}"] = np.bincount(f_idx, weights=gvals, minlength=F)
        demb += demb_w
    if params.embedding is not None:
        grads["embedding"] = scatter_embedding_grad(
            batch.ids, demb, params.embedding.shape[0]
        )
    return grads


def classify(prob: float) -> int:
    """Hard label from a probability: check-worthy iff prob >= 1/2."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability out of range: {prob}")
    return 1 if prob >= 0.5 else 0


def score_corpus(
    encoded: Sequence[Sequence[int]],
    token_lists: Sequence[Sequence[str]],
    params: ModelParams,
    config: ModelConfig,
    provider: Provider,
    batch_size: int = 10,
) -> np.ndarray:
    """Forward probabilities for a whole corpus, original order."""
    scores = np.zeros(len(encoded), dtype=np.float64)
    for batch in make_batches(encoded, batch_size):
        emb = provider.embed(batch.ids, params.embedding)
        extra = provider.extra_features([token_lists[i] for i in batch.indices])
        probs, _ = forward(batch, emb, params, config, extra=extra)
        scores[batch.indices] = probs
    return scores


def rank_topics(
    tweets: Sequence[LabeledTweet],
    scores: np.ndarray,
    run_id: str,
) -> list[RankedRun]:
    """One RankedRun per topic (first-appearance order), scores descending
    with tweet-id ties ascending."""
    if len(tweets) != len(scores):
        raise InternalConsistencyError("scores do not align with tweets")
    by_topic: dict[str, list[tuple[str, float]]] = {}
    for tweet, score in zip(tweets, scores):
        by_topic.setdefault(tweet.topic_id, []).append((tweet.tweet_id, float(score)))
    return [
        RankedRun.from_scores(topic, pairs, run_id) for topic, pairs in by_topic.items()
    ]


# --- checkpoint container ---------------------------------------------------
#
# Layout:  magic "CWRANK1\n"
#          header: one JSON line (sort_keys), holding config, provider
#                  description, preprocessing policy, vocabulary hash, seed,
#                  optional tfidf state, and the tensor manifest
#          body:   raw little-endian float64 tensor data, manifest order
#
# JSON with sorted keys plus a fixed tensor order makes equal runs produce
# byte-identical files (no timestamps, no compression metadata).


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    config: ModelConfig,
    meta: Mapping,
) -> None:
    tensors = params.named_tensors()
    manifest = [{"name": n, "shape": list(t.shape)} for n, t in tensors.items()]
    header = {
        "config": config.to_dict(),
        "tensors": manifest,
        **{str(k): v for k, v in meta.items()},
    }
    header_line = json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n"
    with Path(path).open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(header_line.encode("utf-8"))
        for name, tensor in tensors.items():
            fh.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


@dataclass
class Checkpoint:
    config: ModelConfig
    params: ModelParams
    header: dict


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    raw = path.read_bytes()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise ParseError(f"{path}: not a cwrank checkpoint (bad magic)")
    nl = raw.index(b"\n", len(CHECKPOINT_MAGIC))
    try:
        header = json.loads(raw[len(CHECKPOINT_MAGIC) : nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: corrupt checkpoint header: {exc}") from None
    config = ModelConfig.from_dict(header["config"])
    body = raw[nl + 1 :]
    offset = 0
    arrays: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        nbytes = size * 8
        if offset + nbytes > len(body):
            raise ParseError(f"{path}: truncated tensor data for {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(
            body[offset : offset + nbytes], dtype="<f8"
        ).reshape(shape).copy()
        offset += nbytes
    if offset != len(body):
        raise ParseError(f"{path}: {len(body) - offset} trailing bytes after tensors")
    filters: dict[int, np.ndarray] = {}
    conv_bias: dict[int, np.ndarray] = {}
    for w in config.filter_widths:
        filters[w] = arrays[f"filters.w{w}"]
        conv_bias[w] = arrays[f"conv_bias.w{w}"]
    params = ModelParams(
        filters=filters,
        conv_bias=conv_bias,
        dense_w=arrays["dense_w"],
        dense_b=arrays["dense_b"],
        embedding=arrays.get("embedding"),
    )
    return Checkpoint(config=config, params=params, header=header)
