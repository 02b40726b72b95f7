"""Mini-batch training loop: per-document gradients, averaged, one Adam step per batch."""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from tqdm import tqdm

from src.config import Ablation, ItsConfig, TrainConfig, apply_ablation, get_settings
from src.corpus import CorpusError, Document
from src.filesystem import atomic_write_text
from src.network import Checkpoint, CheckpointError, ItsParameters, forward, init_parameters, save_checkpoint
from src.network.params import is_bias
from src.oracle import greedy_oracle_labels
from src.tensor import RngState, Tape
from src.vocabulary import EmbeddingMatrix, Vocabulary, build_vocabulary, tokenize_and_pad

from .loss import bce_loss, l2_gradients, l2_penalty
from .optimizer import NumericalError, OptimizerState, adam_step, lr_schedule

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("epoch", "lr", "mean_loss", "label_accuracy", "wall_seconds")

# rng sub-streams
_INIT_STREAM = 0
_SHUFFLE_STREAM = 1
_DROPOUT_STREAM = 2


@dataclass
class Example:
    """A document ready for the network: id grid plus 0/1 targets."""

    doc_id: str
    index: int
    token_ids: np.ndarray
    labels: np.ndarray


@dataclass
class DocumentStep:
    loss: float
    grads: dict[str, np.ndarray]
    correct: int
    sentences: int


@dataclass
class EpochMetrics:
    epoch: int
    lr: float
    mean_loss: float
    label_accuracy: float
    wall_seconds: float

    def to_row(self) -> list:
        return [self.epoch, self.lr, self.mean_loss, self.label_accuracy, round(self.wall_seconds, 3)]


@dataclass
class TrainResult:
    params: ItsParameters
    vocabulary: Vocabulary
    history: list[EpochMetrics] = field(default_factory=list)
    checkpoints: list[Path] = field(default_factory=list)
    optimizer: OptimizerState | None = None
    stopped_early: bool = False

    @property
    def config(self) -> ItsConfig:
        return self.params.config


EpochHook = Callable[[EpochMetrics, ItsParameters], bool | None]


def effective_config(its: ItsConfig, train: TrainConfig, ablation: Ablation | str = Ablation.FULL) -> ItsConfig:
    """The network config actually trained: ablation applied, dropout from the train config."""
    return replace(apply_ablation(its, ablation), keep_prob=train.keep_prob)


def prepare_examples(
    documents: Sequence[Document],
    vocab: Vocabulary,
    max_words: int,
    max_select: int = 3,
    recompute_labels: bool = False,
) -> list[Example]:
    """Tokenize every document and attach labels, running the oracle where needed."""
    examples = []
    for index, document in enumerate(documents):
        if document.labels is not None and not (recompute_labels and document.has_highlights):
            labels = document.labels
        elif document.has_highlights:
            labels = greedy_oracle_labels(document, max_select)
        else:
            raise CorpusError(f"Document '{document.id}' has neither labels nor a gold summary")
        examples.append(
            Example(
                doc_id=document.id,
                index=index,
                token_ids=tokenize_and_pad(document, vocab, max_words),
                labels=np.asarray(labels, dtype=np.int64),
            )
        )
    return examples


def document_gradient(
    example: Example,
    params: ItsParameters,
    gen: np.random.Generator | None = None,
    train_mode: bool = True,
) -> DocumentStep:
    """Loss and parameter gradients for one document on its own tape."""
    tape = Tape()
    leaves = params.as_tensors(tape)
    result = forward(example.token_ids, leaves, params.config, train_mode=train_mode, gen=gen)
    loss = bce_loss(result.scores, example.labels)
    grads = tape.named_gradients(tape.backward(loss))
    predicted = (result.score_array() >= 0.5).astype(np.int64)
    return DocumentStep(
        loss=loss.item(),
        grads=grads,
        correct=int(np.sum(predicted == example.labels)),
        sentences=len(example.labels),
    )


def evaluate_accuracy(examples: Sequence[Example], params: ItsParameters) -> float:
    """Inference-mode sentence label accuracy (threshold 0.5)."""
    if not examples:
        raise CorpusError("Cannot evaluate on an empty corpus")
    weights = params.as_tensors()
    correct = total = 0
    for example in examples:
        scores = forward(example.token_ids, weights, params.config).score_array()
        correct += int(np.sum((scores >= 0.5).astype(np.int64) == example.labels))
        total += len(example.labels)
    return correct / total


def write_metrics(path: str | Path, history: Sequence[EpochMetrics]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(METRICS_COLUMNS)
    for row in history:
        writer.writerow(row.to_row())
    return atomic_write_text(path, buffer.getvalue())


def read_metrics(path: str | Path) -> list[EpochMetrics]:
    """Rows of an existing metrics.csv; an absent file reads as no rows."""
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="", encoding="utf-8") as f:
        return [
            EpochMetrics(
                epoch=int(row["epoch"]),
                lr=float(row["lr"]),
                mean_loss=float(row["mean_loss"]),
                label_accuracy=float(row["label_accuracy"]),
                wall_seconds=float(row["wall_seconds"]),
            )
            for row in csv.DictReader(f)
        ]


def checkpoint_target(pattern: str | Path, epoch: int) -> Path:
    """Fill an ``{epoch}`` placeholder; a plain path is overwritten every epoch."""
    return Path(str(pattern).replace("{epoch}", f"{epoch:03d}"))


def _batch_step(
    batch: Sequence[Example],
    params: ItsParameters,
    rng: RngState,
    epoch: int,
    pool: ThreadPoolExecutor | None,
) -> list[DocumentStep]:
    def run(example: Example) -> DocumentStep:
        return document_gradient(example, params, rng.generator(_DROPOUT_STREAM, epoch, example.index))

    # map() keeps batch order so the gradient sum is the same for any worker count
    steps = list(pool.map(run, batch)) if pool is not None else [run(e) for e in batch]
    for example, step in zip(batch, steps):
        if not np.isfinite(step.loss):
            raise NumericalError(f"Loss diverged at epoch {epoch + 1} on document '{example.doc_id}'")
    return steps


def _average(steps: Sequence[DocumentStep], names: Sequence[str]) -> dict[str, np.ndarray]:
    averaged = {}
    for name in names:
        total = steps[0].grads[name].copy()
        for step in steps[1:]:
            total += step.grads[name]
        averaged[name] = total / len(steps)
    return averaged


def train(
    documents: Sequence[Document],
    its_config: ItsConfig,
    train_config: TrainConfig,
    ablation: Ablation | str = Ablation.FULL,
    vocabulary: Vocabulary | None = None,
    embeddings: EmbeddingMatrix | None = None,
    checkpoint_path: str | Path | None = None,
    metrics_path: str | Path | None = None,
    resume: Checkpoint | None = None,
    on_epoch_end: EpochHook | None = None,
    workers: int | None = None,
    progress: bool = False,
) -> TrainResult:
    """Train ITS on ``documents``.

    Args:
        documents: training corpus; each document needs labels or highlights
        ablation: variant to train (full, no_selective, no_iteration, no_concat)
        checkpoint_path: saved after every epoch; may contain ``{epoch}``
        metrics_path: CSV rewritten after every epoch; on resume, rows up to the
            checkpoint epoch already in the file are kept
        resume: continue from this checkpoint's parameters, optimizer and epoch
        on_epoch_end: called with the epoch metrics and current parameters;
            returning True stops training
        workers: threads for per-document gradients (default from settings)

    Returns:
        TrainResult with the final parameters and per-epoch history
    """
    if not documents:
        raise CorpusError("Cannot train on an empty corpus")
    config = effective_config(its_config, train_config, ablation)
    rng = RngState(train_config.seed)

    if resume is not None:
        if resume.config != config:
            raise CheckpointError("Checkpoint config does not match the requested model config")
        vocab = resume.vocabulary
        params = resume.params.copy()
        if resume.optimizer is not None:
            state = OptimizerState.from_dict(resume.optimizer)
        else:
            state = OptimizerState.create(params.arrays, train_config.beta1, train_config.beta2, train_config.epsilon)
        start_epoch = resume.epoch
        logger.info("Resuming from epoch %d", start_epoch)
    else:
        vocab = vocabulary or build_vocabulary(documents)
        params = init_parameters(config, len(vocab), rng.derive(_INIT_STREAM), embeddings)
        state = OptimizerState.create(params.arrays, train_config.beta1, train_config.beta2, train_config.epsilon)
        start_epoch = 0

    examples = prepare_examples(
        documents, vocab, config.max_words, train_config.max_select, train_config.recompute_labels
    )
    regularized = [name for name in params.names() if not is_bias(name)]
    workers = workers if workers is not None else get_settings().workers
    logger.info(
        "Training %d documents, %d parameters, epochs %d..%d, ablation %s",
        len(examples),
        params.count(),
        start_epoch + 1,
        train_config.epochs,
        Ablation(ablation).value,
    )

    earlier: list[EpochMetrics] = []
    if resume is not None and metrics_path is not None:
        earlier = [m for m in read_metrics(metrics_path) if m.epoch <= start_epoch]

    result = TrainResult(params=params, vocabulary=vocab, optimizer=state)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for epoch in range(start_epoch, train_config.epochs):
            started = time.perf_counter()
            lr = lr_schedule(epoch, train_config)
            order = np.arange(len(examples))
            if train_config.shuffle:
                order = rng.generator(_SHUFFLE_STREAM, epoch).permutation(len(examples))
            batches = [order[i : i + train_config.batch_size] for i in range(0, len(order), train_config.batch_size)]

            losses: list[float] = []
            correct = sentences = 0
            for batch_ids in tqdm(batches, desc=f"epoch {epoch + 1}", unit="batch", disable=not progress):
                batch = [examples[i] for i in batch_ids]
                steps = _batch_step(batch, params, rng, epoch, pool)
                grads = _average(steps, params.names())
                penalty = 0.0
                if train_config.l2 > 0:
                    penalty = l2_penalty(params.as_tensors(), regularized, train_config.l2).item()
                    for name, extra in l2_gradients(params.arrays, regularized, train_config.l2).items():
                        grads[name] = grads[name] + extra
                adam_step(params.arrays, grads, state, lr)
                losses.extend(step.loss + penalty for step in steps)
                correct += sum(step.correct for step in steps)
                sentences += sum(step.sentences for step in steps)

            metrics = EpochMetrics(
                epoch=epoch + 1,
                lr=lr,
                mean_loss=float(np.mean(losses)),
                label_accuracy=correct / sentences,
                wall_seconds=time.perf_counter() - started,
            )
            result.history.append(metrics)
            logger.info(
                "epoch %d lr %g loss %.6f accuracy %.4f (%.1fs)",
                metrics.epoch,
                metrics.lr,
                metrics.mean_loss,
                metrics.label_accuracy,
                metrics.wall_seconds,
            )
            if metrics_path is not None:
                write_metrics(metrics_path, earlier + result.history)
            if checkpoint_path is not None:
                target = checkpoint_target(checkpoint_path, metrics.epoch)
                save_checkpoint(
                    target,
                    Checkpoint(
                        params=params,
                        vocabulary=vocab,
                        epoch=metrics.epoch,
                        train_config=train_config,
                        optimizer=state.to_dict(),
                    ),
                )
                result.checkpoints.append(target)
            if on_epoch_end is not None and on_epoch_end(metrics, params):
                logger.info("Stopped by epoch hook after epoch %d", metrics.epoch)
                result.stopped_early = True
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return result
