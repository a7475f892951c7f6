"""Training: binary cross-entropy minimized with Adam.

The published preset is lr 2e-5 for 8 epochs at batch size 10; that rate
presumes strong pretrained features, so tests that train embeddings from
scratch use a faster acceptance preset (lr 1e-3, bounded epochs).

Everything is deterministic given (seed, data, config): one RNG drives the
per-epoch reshuffle, parameter init order is fixed, and updates run strictly
sequentially.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import metrics
from .data import LabeledTweet
from .errors import BatchTooShortError, ConfigError, InternalConsistencyError, TrainingError
from .features import Provider, ProviderPlan
from .model import (
    ModelConfig,
    ModelParams,
    backward,
    forward,
    init_params,
    rank_topics,
    score_corpus,
)
from .preprocess import PreprocessPolicy, preprocess_texts
from .vocab import Vocabulary, build_vocab, make_batches

PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class OptimConfig:
    learning_rate: float = 2e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 8
    batch_size: int = 10
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("betas must lie in [0, 1)")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient w.r.t. the probabilities.

    Probabilities are clamped to [1e-7, 1-1e-7] before the logs; the clamp
    is flat, so clamped entries get zero gradient.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if probs.shape != labels.shape:
        raise ValueError(f"probs {probs.shape} vs labels {labels.shape}")
    n = probs.shape[0]
    p = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = -float(np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))
    grad = (p - labels) / (p * (1.0 - p) * n)
    grad = np.where(p == probs, grad, 0.0)
    return loss, grad


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_tensors(cls, tensors: Mapping[str, np.ndarray]) -> "AdamState":
        return cls(
            m={n: np.zeros_like(a) for n, a in tensors.items()},
            v={n: np.zeros_like(a) for n, a in tensors.items()},
        )


def adam_step(
    tensors: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    config: OptimConfig,
) -> None:
    """One bias-corrected Adam update, applied to the tensors in place."""
    state.t += 1
    bc1 = 1.0 - config.beta1**state.t
    bc2 = 1.0 - config.beta2**state.t
    for name, param in tensors.items():
        if name not in grads:
            raise InternalConsistencyError(f"missing gradient for {name!r}")
        g = grads[name]
        if g.shape != param.shape:
            raise InternalConsistencyError(
                f"gradient shape {g.shape} != parameter shape {param.shape} for {name!r}"
            )
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in {name!r}")
        m, v = state.m[name], state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * np.square(g)
        param -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)


@dataclass
class HistoryEntry:
    epoch: int
    train_loss: float
    dev_map: float


@dataclass
class TrainResult:
    """Final-epoch params plus the best-dev-MAP snapshot, so either
    selection convention can be reproduced downstream."""

    params: ModelParams
    best_params: ModelParams
    best_epoch: int
    history: list[HistoryEntry]
    vocabulary: Vocabulary
    provider: Provider
    config: ModelConfig
    train_tokens: list[list[str]] = field(repr=False, default_factory=list)


def write_history(history: Sequence[HistoryEntry], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch\ttrain_loss\tdev_map\n")
        for h in history:
            fh.write(f"{h.epoch}\t{h.train_loss:.6f}\t{h.dev_map:.6f}\n")


def _dev_map(
    dev_set: Sequence[LabeledTweet],
    encoded: Sequence[Sequence[int]],
    token_lists: Sequence[Sequence[str]],
    params: ModelParams,
    config: ModelConfig,
    provider: Provider,
    batch_size: int,
) -> float:
    scores = score_corpus(encoded, token_lists, params, config, provider, batch_size)
    runs = rank_topics(dev_set, scores, run_id="dev")
    gold = {(t.topic_id, t.tweet_id): t.label for t in dev_set}
    judged = [metrics.judge_run(run, gold) for run in runs]
    return metrics.mean_average_precision(judged)


def train(
    dataset: Sequence[LabeledTweet],
    dev_set: Sequence[LabeledTweet],
    model_config: ModelConfig,
    optim_config: OptimConfig,
    provider_plan: ProviderPlan,
    policy: PreprocessPolicy,
) -> TrainResult:
    """Full pipeline: preprocess, build vocabulary on the training split,
    resolve the embedding provider, then epochs x batches of
    forward / loss / backward / Adam with a per-epoch reshuffle and dev-MAP
    tracking after every epoch.
    """
    if not dataset:
        raise ConfigError("training set is empty")
    if not dev_set:
        raise ConfigError("development set is empty")
    train_tokens = preprocess_texts([t.text for t in dataset], policy)
    dev_tokens = preprocess_texts([t.text for t in dev_set], policy)
    vocabulary = build_vocab(train_tokens)
    provider = provider_plan.build(vocabulary, train_tokens)
    config = dataclasses.replace(
        model_config, embed_dim=provider.dim, extra_dim=provider.extra_dim
    )
    encoded_train = [vocabulary.encode(t) for t in train_tokens]
    encoded_dev = [vocabulary.encode(t) for t in dev_tokens]
    labels = np.array([t.label for t in dataset], dtype=np.float64)

    params = init_params(config, provider, vocab_size=len(vocabulary))
    state = AdamState.for_tensors(params.named_tensors())
    rng = np.random.default_rng(optim_config.seed)
    history: list[HistoryEntry] = []
    best_params = params.copy()
    best_map = -np.inf
    best_epoch = 0
    n = len(encoded_train)
    for epoch in range(1, optim_config.epochs + 1):
        order = rng.permutation(n) if optim_config.shuffle else np.arange(n)
        total_loss = 0.0
        for batch_index, batch in enumerate(
            make_batches(encoded_train, optim_config.batch_size, order)
        ):
            try:
                emb = provider.embed(batch.ids, params.embedding)
                extra = provider.extra_features([train_tokens[i] for i in batch.indices])
                probs, trace = forward(batch, emb, params, config, extra=extra)
                loss, dprobs = bce_loss(probs, labels[batch.indices])
                grads = backward(trace, batch, params, config, dprobs)
                adam_step(params.named_tensors(), grads, state, optim_config)
            except (TrainingError, BatchTooShortError) as exc:
                raise type(exc)(f"epoch {epoch}, batch {batch_index}: {exc}") from None
            total_loss += loss * batch.size
        dev_map = _dev_map(
            dev_set, encoded_dev, dev_tokens, params, config, provider,
            optim_config.batch_size,
        )
        history.append(HistoryEntry(epoch=epoch, train_loss=total_loss / n, dev_map=dev_map))
        if dev_map > best_map:
            best_map = dev_map
            best_epoch = epoch
            best_params = params.copy()
    return TrainResult(
        params=params,
        best_params=best_params,
        best_epoch=best_epoch,
        history=history,
        vocabulary=vocabulary,
        provider=provider,
        config=config,
        train_tokens=train_tokens,
    )
