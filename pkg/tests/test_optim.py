"""Loss, Adam updates and the end-to-end training loop."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cwrank import (
    AdamState,
    ConfigError,
    InternalConsistencyError,
    LabeledTweet,
    ModelConfig,
    OptimConfig,
    PreprocessPolicy,
    ProviderKind,
    ProviderPlan,
    SegmentAction,
    TrainingError,
    adam_step,
    bce_loss,
    forward,
    init_params,
    train,
)
from cwrank.features import trainable_provider
from cwrank.model import backward
from cwrank.optim import PROB_CLAMP, HistoryEntry, write_history
from cwrank.vocab import pad_batch

NUMBER_POLICY = PreprocessPolicy(
    hashtag=SegmentAction.KEEP,
    mention=SegmentAction.KEEP,
    url=SegmentAction.KEEP,
    numeric=SegmentAction.SPECIAL_TOKEN,
    lowercase=True,
)


def synthetic_tweets(n, seed=0):
    """Positives state a number; negatives never do."""
    rng = np.random.default_rng(seed)
    fillers = ["people", "say", "the", "report", "was", "calm", "quiet", "today"]
    tweets = []
    for i in range(n):
        label = i % 2
        words = [fillers[int(j)] for j in rng.integers(0, len(fillers), size=5)]
        if label:
            words.insert(2, f"{int(rng.integers(1, 500))} cases")
        text = " ".join(words)
        tweets.append(
            LabeledTweet(topic_id="covid", tweet_id=str(1000 + i), text=text, label=label, source="CLEF")
        )
    return tweets


class TestOptimConfig:
    def test_paper_defaults(self):
        config = OptimConfig()
        assert config.learning_rate == 2e-5
        assert config.epochs == 8
        assert config.batch_size == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"learning_rate": 0.0},
            {"learning_rate": -1e-5},
            {"beta1": 1.0},
            {"beta2": -0.1},
            {"epsilon": 0.0},
            {"epochs": 0},
            {"batch_size": 0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigError):
            OptimConfig(**kwargs)


class TestBceLoss:
    def test_half_probability_is_ln2(self):
        loss, _ = bce_loss(np.array([0.5, 0.5]), np.array([1.0, 0.0]))
        assert loss == pytest.approx(math.log(2.0), abs=1e-12)

    def test_perfect_prediction_loss_tiny(self):
        loss, _ = bce_loss(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert loss == pytest.approx(-math.log(1.0 - PROB_CLAMP), abs=1e-12)

    def test_confident_wrong_is_clamped(self):
        loss, _ = bce_loss(np.array([1.0]), np.array([0.0]))
        assert loss == pytest.approx(-math.log(PROB_CLAMP), rel=1e-9)

    def test_clamped_entries_get_zero_grad(self):
        _, grad = bce_loss(np.array([0.0, 1.0, 0.5]), np.array([1.0, 0.0, 1.0]))
        assert grad[0] == 0.0
        assert grad[1] == 0.0
        assert grad[2] != 0.0

    def test_gradient_matches_finite_difference(self):
        rng = np.random.default_rng(4)
        probs = rng.uniform(0.05, 0.95, size=6)
        labels = rng.integers(0, 2, size=6).astype(np.float64)
        _, grad = bce_loss(probs, labels)
        h = 1e-7
        for i in range(len(probs)):
            up = probs.copy()
            up[i] += h
            down = probs.copy()
            down[i] -= h
            fd = (bce_loss(up, labels)[0] - bce_loss(down, labels)[0]) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-5)

    def test_mean_scaling(self):
        # doubling the batch with a duplicate halves each gradient entry
        _, g1 = bce_loss(np.array([0.3]), np.array([1.0]))
        _, g2 = bce_loss(np.array([0.3, 0.3]), np.array([1.0, 1.0]))
        assert g2[0] == pytest.approx(g1[0] / 2)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            bce_loss(np.array([0.5]), np.array([1.0, 0.0]))


class TestAdamStep:
    def _one(self, value=1.0):
        tensors = {"w": np.array([value])}
        state = AdamState.for_tensors(tensors)
        return tensors, state

    def test_zero_grad_leaves_param(self):
        tensors, state = self._one()
        adam_step(tensors, {"w": np.zeros(1)}, state, OptimConfig())
        assert tensors["w"][0] == 1.0
        assert state.t == 1

    def test_first_step_magnitude_is_learning_rate(self):
        config = OptimConfig(learning_rate=2e-5)
        tensors, state = self._one()
        adam_step(tensors, {"w": np.array([0.37])}, state, config)
        delta = tensors["w"][0] - 1.0
        assert delta == pytest.approx(-config.learning_rate, rel=1e-3)

    def test_first_step_sign_follows_gradient(self):
        config = OptimConfig(learning_rate=1e-3)
        tensors, state = self._one()
        adam_step(tensors, {"w": np.array([-0.5])}, state, config)
        assert tensors["w"][0] > 1.0

    def test_bitwise_determinism(self):
        config = OptimConfig(learning_rate=1e-3)
        rng = np.random.default_rng(8)
        grads_seq = [rng.normal(size=4) for _ in range(5)]
        results = []
        for _ in range(2):
            tensors = {"w": np.linspace(0, 1, 4)}
            state = AdamState.for_tensors(tensors)
            for g in grads_seq:
                adam_step(tensors, {"w": g}, state, config)
            results.append(tensors["w"].copy())
        np.testing.assert_array_equal(results[0], results[1])

    def test_nan_grad_raises(self):
        tensors, state = self._one()
        with pytest.raises(TrainingError, match="'w'"):
            adam_step(tensors, {"w": np.array([np.nan])}, state, OptimConfig())

    def test_missing_grad_raises(self):
        tensors, state = self._one()
        with pytest.raises(InternalConsistencyError, match="'w'"):
            adam_step(tensors, {}, state, OptimConfig())

    def test_shape_mismatch_raises(self):
        tensors, state = self._one()
        with pytest.raises(InternalConsistencyError):
            adam_step(tensors, {"w": np.zeros(3)}, state, OptimConfig())

    def test_zero_grad_rows_untouched_from_fresh_state(self):
        # embedding-style sparsity: rows outside the batch never move
        tensors = {"emb": np.ones((4, 2))}
        state = AdamState.for_tensors(tensors)
        grad = np.zeros((4, 2))
        grad[1] = 0.5
        adam_step(tensors, {"emb": grad}, state, OptimConfig(learning_rate=1e-3))
        np.testing.assert_array_equal(tensors["emb"][0], [1.0, 1.0])
        np.testing.assert_array_equal(tensors["emb"][2], [1.0, 1.0])
        assert tensors["emb"][1, 0] != 1.0

    def test_step_counter_tracks_batches(self):
        tensors, state = self._one()
        for _ in range(68):
            adam_step(tensors, {"w": np.array([0.1])}, state, OptimConfig())
        assert state.t == 68


class TestLossDescent:
    def test_repeated_steps_reduce_loss(self):
        config = ModelConfig(filter_widths=(2, 3), filters_per_width=4, embed_dim=8, seed=1)
        provider = trainable_provider(dim=8)
        params = init_params(config, provider, vocab_size=12)
        optim = OptimConfig(learning_rate=1e-3)
        state = AdamState.for_tensors(params.named_tensors())
        batch = pad_batch(
            [[2, 4, 5, 6, 3], [2, 7, 8, 3], [2, 9, 10, 11, 4, 3], [2, 5, 5, 3]],
            [0, 1, 2, 3],
            labels=[1, 0, 1, 0],
        )
        losses = []
        for _ in range(10):
            emb = provider.embed(batch.ids, params.embedding)
            probs, trace = forward(batch, emb, params, config)
            loss, dprobs = bce_loss(probs, batch.labels)
            losses.append(loss)
            grads = backward(trace, batch, params, config, dprobs)
            adam_step(params.named_tensors(), grads, state, optim)
        assert losses[-1] < losses[0]
        assert all(b < a + 1e-9 for a, b in zip(losses, losses[1:]))


class TestTrain:
    def _run(self, seed=0, epochs=3, n=24):
        return train(
            synthetic_tweets(n),
            synthetic_tweets(10, seed=99),
            ModelConfig(filter_widths=(2, 3), filters_per_width=4, embed_dim=8, seed=seed),
            OptimConfig(learning_rate=1e-3, epochs=epochs, batch_size=5, seed=seed),
            ProviderPlan(ProviderKind.TRAINABLE, dim=8),
            NUMBER_POLICY,
        )

    def test_history_covers_every_epoch(self):
        result = self._run(epochs=3)
        assert [h.epoch for h in result.history] == [1, 2, 3]
        assert all(np.isfinite(h.train_loss) and np.isfinite(h.dev_map) for h in result.history)

    def test_vocabulary_built_from_training_split(self):
        result = self._run()
        assert "<number>" in result.vocabulary
        assert result.config.embed_dim == 8

    def test_best_epoch_is_first_argmax(self):
        result = self._run(epochs=4)
        maps = [h.dev_map for h in result.history]
        assert result.best_epoch == int(np.argmax(maps)) + 1

    def test_deterministic_given_seed(self):
        r1 = self._run(seed=3)
        r2 = self._run(seed=3)
        for name, tensor in r1.params.named_tensors().items():
            np.testing.assert_array_equal(tensor, r2.params.named_tensors()[name])
        assert [(h.train_loss, h.dev_map) for h in r1.history] == [
            (h.train_loss, h.dev_map) for h in r2.history
        ]

    def test_seed_changes_outcome(self):
        r1 = self._run(seed=3)
        r2 = self._run(seed=4)
        assert not np.array_equal(r1.params.dense_w, r2.params.dense_w)

    def test_empty_train_rejected(self):
        with pytest.raises(ConfigError, match="training"):
            train(
                [],
                synthetic_tweets(4),
                ModelConfig(filter_widths=(2,)),
                OptimConfig(),
                ProviderPlan(ProviderKind.TRAINABLE, dim=8),
                NUMBER_POLICY,
            )

    def test_empty_dev_rejected(self):
        with pytest.raises(ConfigError, match="development"):
            train(
                synthetic_tweets(4),
                [],
                ModelConfig(filter_widths=(2,)),
                OptimConfig(),
                ProviderPlan(ProviderKind.TRAINABLE, dim=8),
                NUMBER_POLICY,
            )

    def test_failure_carries_epoch_and_batch(self, monkeypatch):
        def poisoned(trace, batch, params, config, dprobs):
            grads = backward(trace, batch, params, config, dprobs)
            grads["dense_b"] = np.array([np.nan])
            return grads

        import cwrank.optim as optim_module

        monkeypatch.setattr(optim_module, "backward", poisoned)
        with pytest.raises(TrainingError, match=r"epoch 1, batch 0"):
            self._run()

    def test_no_shuffle_mode_runs(self):
        result = train(
            synthetic_tweets(12),
            synthetic_tweets(6, seed=99),
            ModelConfig(filter_widths=(2,), filters_per_width=2, embed_dim=4, seed=0),
            OptimConfig(learning_rate=1e-3, epochs=1, batch_size=4, seed=0, shuffle=False),
            ProviderPlan(ProviderKind.TRAINABLE, dim=4),
            NUMBER_POLICY,
        )
        assert len(result.history) == 1


class TestWriteHistory:
    def test_golden_file(self, tmp_path):
        path = tmp_path / "h.tsv"
        write_history(
            [HistoryEntry(epoch=1, train_loss=0.6931471805, dev_map=0.75)], path
        )
        assert path.read_text() == "epoch\ttrain_loss\tdev_map\n1\t0.693147\t0.750000\n"
