"""Tests for the training loop."""

import csv
from dataclasses import replace

import numpy as np
import pytest

from src.config import Ablation, ItsConfig, TrainConfig
from src.corpus import CorpusError, Document
from src.network import Checkpoint, CheckpointError, load_checkpoint
from src.synthetic import MarkerCorpusOptions, generate_marker_corpus
from src.tensor import RngState
from src.vocabulary import build_vocabulary

from .optimizer import NumericalError, lr_schedule
from .trainer import METRICS_COLUMNS, effective_config, evaluate_accuracy, prepare_examples, read_metrics, train

TINY = ItsConfig(iterations=2, hidden=6, embedding=6, max_words=8, keep_prob=1.0)
QUICK = TrainConfig(learning_rate=0.01, anneal_period=100, epochs=2, batch_size=4, keep_prob=1.0, seed=3)


@pytest.fixture
def corpus():
    return generate_marker_corpus(MarkerCorpusOptions(documents=8), RngState(11))


def _same_params(a, b):
    assert a.names() == b.names()
    for name in a.names():
        np.testing.assert_array_equal(a.arrays[name], b.arrays[name], err_msg=name)


# ##################################################################
# test preconditions
def test_empty_corpus_raises():
    with pytest.raises(CorpusError, match="empty corpus"):
        train([], TINY, QUICK)


def test_document_without_labels_or_highlights_raises():
    doc = Document.create(id="bare", sentences=[["a", "b"], ["c"]])
    with pytest.raises(CorpusError, match="'bare'"):
        train([doc], TINY, QUICK)


def test_oracle_fills_missing_labels(corpus):
    unlabeled = [replace(doc, labels=None) for doc in corpus]
    examples = prepare_examples(unlabeled, build_vocabulary(corpus), max_words=8)
    for doc, example in zip(corpus, examples):
        assert example.labels[doc.labels.index(1)] == 1
        assert example.token_ids.shape == (doc.n_sentences, 8)


# ##################################################################
# test the epoch loop
def test_single_batch_thirty_epochs_follows_schedule(corpus):
    config = TrainConfig(epochs=30, batch_size=64, keep_prob=1.0)
    result = train(corpus[:4], TINY, config)
    assert len(result.history) == 30
    assert [m.lr for m in result.history] == [lr_schedule(e, config) for e in range(30)]
    assert [m.lr for m in result.history] == [0.001 * 0.5 ** (e // 6) for e in range(30)]
    assert result.optimizer.step == 30


def test_loss_decreases_on_fixed_batch(corpus):
    config = replace(QUICK, epochs=10, batch_size=len(corpus), shuffle=False)
    history = train(corpus, TINY, config).history
    assert history[-1].mean_loss < history[0].mean_loss


def test_reported_loss_includes_l2_penalty(corpus):
    # one batch, one epoch: the data term is identical, only the penalty differs
    single = replace(QUICK, epochs=1, batch_size=len(corpus))
    losses = [train(corpus, TINY, replace(single, l2=l2)).history[0].mean_loss for l2 in (0.0, 0.25, 0.5)]
    assert losses[1] > losses[0]
    assert losses[2] - losses[0] == pytest.approx(2 * (losses[1] - losses[0]), rel=1e-9)


def test_training_is_deterministic(corpus):
    first = train(corpus, TINY, QUICK)
    second = train(corpus, TINY, QUICK)
    _same_params(first.params, second.params)
    assert [m.mean_loss for m in first.history] == [m.mean_loss for m in second.history]


def test_worker_threads_do_not_change_result(corpus):
    _same_params(train(corpus, TINY, QUICK, workers=1).params, train(corpus, TINY, QUICK, workers=3).params)


def test_dropout_uses_train_keep_prob(corpus):
    config = effective_config(TINY, replace(QUICK, keep_prob=0.5), Ablation.NO_CONCAT)
    assert config.keep_prob == 0.5
    assert config.use_concat_labeling is False
    result = train(corpus, TINY, replace(QUICK, keep_prob=0.5))
    assert result.config.keep_prob == 0.5


# ##################################################################
# test ablations
@pytest.mark.parametrize("ablation", list(Ablation))
def test_every_ablation_trains(corpus, ablation):
    result = train(corpus, TINY, QUICK, ablation=ablation)
    assert len(result.history) == 2
    assert all(np.isfinite(m.mean_loss) for m in result.history)


def test_no_iteration_equals_single_iteration_model(corpus):
    ablated = train(corpus, replace(TINY, iterations=4), QUICK, ablation=Ablation.NO_ITERATION)
    single = train(corpus, replace(TINY, iterations=1), QUICK)
    assert ablated.config == single.config
    _same_params(ablated.params, single.params)


# ##################################################################
# test outputs, resume and hooks
def test_checkpoint_and_metrics_per_epoch(corpus, tmp_path):
    result = train(
        corpus,
        TINY,
        QUICK,
        checkpoint_path=tmp_path / "model-{epoch}.json",
        metrics_path=tmp_path / "metrics.csv",
    )
    assert [p.name for p in result.checkpoints] == ["model-001.json", "model-002.json"]
    last = load_checkpoint(result.checkpoints[-1])
    assert last.epoch == 2
    assert last.vocabulary == result.vocabulary
    _same_params(last.params, result.params)

    with open(tmp_path / "metrics.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == METRICS_COLUMNS
    assert [int(r[0]) for r in rows[1:]] == [1, 2]
    assert float(rows[1][1]) == QUICK.learning_rate


def test_resume_matches_uninterrupted_run(corpus, tmp_path):
    full = train(corpus, TINY, replace(QUICK, epochs=4))
    partial = train(corpus, TINY, QUICK, checkpoint_path=tmp_path / "ckpt.json")
    resumed = train(corpus, TINY, replace(QUICK, epochs=4), resume=load_checkpoint(partial.checkpoints[-1]))
    assert [m.epoch for m in resumed.history] == [3, 4]
    _same_params(resumed.params, full.params)


def test_resume_keeps_earlier_metrics_rows(corpus, tmp_path):
    metrics = tmp_path / "metrics.csv"
    partial = train(corpus, TINY, QUICK, checkpoint_path=tmp_path / "ckpt.json", metrics_path=metrics)
    train(corpus, TINY, replace(QUICK, epochs=4), resume=load_checkpoint(partial.checkpoints[-1]), metrics_path=metrics)
    rows = read_metrics(metrics)
    assert [m.epoch for m in rows] == [1, 2, 3, 4]
    assert [m.mean_loss for m in rows[:2]] == [m.mean_loss for m in partial.history]


def test_read_metrics_of_missing_file_is_empty(tmp_path):
    assert read_metrics(tmp_path / "absent.csv") == []


def test_resume_rejects_other_config(corpus, tmp_path):
    partial = train(corpus, TINY, QUICK, checkpoint_path=tmp_path / "ckpt.json")
    with pytest.raises(CheckpointError):
        train(corpus, replace(TINY, hidden=7), QUICK, resume=load_checkpoint(partial.checkpoints[-1]))


def test_epoch_hook_stops_training(corpus):
    seen = []

    def hook(metrics, params):
        seen.append(metrics.epoch)
        return metrics.epoch == 2

    result = train(corpus, TINY, replace(QUICK, epochs=10), on_epoch_end=hook)
    assert seen == [1, 2]
    assert result.stopped_early


def test_nan_parameters_abort_training(corpus):
    start = train(corpus, TINY, replace(QUICK, epochs=1))
    broken = start.params.copy()
    broken.arrays["head.W4"][:] = np.nan
    checkpoint = Checkpoint(params=broken, vocabulary=start.vocabulary, epoch=1)
    with pytest.raises(NumericalError, match="epoch 2"):
        train(corpus, TINY, QUICK, resume=checkpoint)


# ##################################################################
# test learnability on the marker corpus
def test_marker_sentences_are_learned():
    docs = generate_marker_corpus(MarkerCorpusOptions(documents=32), RngState(5))
    vocab = build_vocabulary(docs)
    model = ItsConfig(iterations=2, hidden=16, embedding=16, max_words=8, keep_prob=1.0)
    config = TrainConfig(learning_rate=0.01, anneal_period=1000, epochs=200, batch_size=8, keep_prob=1.0, seed=1)
    examples = prepare_examples(docs, vocab, max_words=8)
    accuracies = []

    def hook(metrics, params):
        accuracies.append(evaluate_accuracy(examples, params))
        return accuracies[-1] >= 0.95

    train(docs, model, config, vocabulary=vocab, on_epoch_end=hook)
    assert max(accuracies) >= 0.95
