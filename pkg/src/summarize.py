"""Sentence selection, the Lead-3 baseline, ROUGE evaluation of summaries and score heatmaps."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from src.config import get_settings
from src.corpus import CorpusError, Document
from src.filesystem import atomic_write_text
from src.network import ItsParameters, forward
from src.rouge import NO_TRUNCATION, RougeReport, TruncationPolicy, score_corpus
from src.vocabulary import Vocabulary, tokenize_and_pad

SUMMARY_SENTENCES = 3
ORDERS = ("score", "document")


@dataclass
class Summary:
    """Sentences chosen for one document, in output order."""

    doc_id: str
    indices: list[int]
    sentences: list[list[str]]
    scores: list[float] | None = None

    def to_record(self) -> dict:
        record = {"id": self.doc_id, "indices": self.indices, "sentences": self.sentences}
        if self.scores is not None:
            record["scores"] = self.scores
        return record


def select_top(scores: Sequence[float], count: int = SUMMARY_SENTENCES, order: str = "score") -> list[int]:
    """Indices of the ``count`` highest scores; ties go to the lower index.

    ``order="score"`` returns them highest first, ``order="document"`` in
    sentence order.
    """
    if order not in ORDERS:
        raise ValueError(f"Unknown summary order: '{order}'")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    ranked = sorted(range(len(scores)), key=lambda i: (-scores[i], i))[:count]
    return sorted(ranked) if order == "document" else ranked


def lead_indices(n_sentences: int, count: int = SUMMARY_SENTENCES) -> list[int]:
    return list(range(min(count, n_sentences)))


def _summary(document: Document, indices: list[int], scores: np.ndarray | None = None) -> Summary:
    return Summary(
        doc_id=document.id,
        indices=indices,
        sentences=[list(document.sentences[i]) for i in indices],
        scores=None if scores is None else [float(scores[i]) for i in indices],
    )


def lead3(documents: Sequence[Document], count: int = SUMMARY_SENTENCES) -> list[Summary]:
    """First ``count`` sentences of every document, in document order."""
    return [_summary(doc, lead_indices(doc.n_sentences, count)) for doc in documents]


def score_documents(
    documents: Sequence[Document],
    params: ItsParameters,
    vocab: Vocabulary,
    workers: int | None = None,
) -> list[np.ndarray]:
    """Inference-mode extraction probabilities per document, in input order."""
    if len(vocab) != params.vocab_size:
        raise ValueError(f"Vocabulary has {len(vocab)} entries but parameters expect {params.vocab_size}")
    weights = params.as_tensors()

    def run(document: Document) -> np.ndarray:
        grid = tokenize_and_pad(document, vocab, params.config.max_words)
        return forward(grid, weights, params.config).score_array()

    workers = workers if workers is not None else get_settings().workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, documents))
    return [run(doc) for doc in documents]


def summarize(
    documents: Sequence[Document],
    params: ItsParameters,
    vocab: Vocabulary,
    count: int = SUMMARY_SENTENCES,
    order: str = "score",
    workers: int | None = None,
) -> list[Summary]:
    scores = score_documents(documents, params, vocab, workers)
    return [_summary(doc, select_top(s, count, order), s) for doc, s in zip(documents, scores)]


def evaluate_summaries(
    summaries: Sequence[Summary],
    documents: Sequence[Document],
    policy: TruncationPolicy = NO_TRUNCATION,
) -> RougeReport:
    """Score summaries against each document's highlights."""
    missing = [doc.id for doc in documents if not doc.has_highlights]
    if missing:
        raise CorpusError(f"{len(missing)} documents have no gold summary: {', '.join(missing[:5])}")
    pairs = [(summary.sentences, list(doc.highlights)) for summary, doc in zip(summaries, documents)]
    return score_corpus(pairs, policy)


def iteration_heatmap(document: Document, params: ItsParameters, vocab: Vocabulary) -> np.ndarray:
    """(K, n_s) extraction probabilities from each iteration's features alone."""
    grid = tokenize_and_pad(document, vocab, params.config.max_words)
    return forward(grid, params, params.config).auxiliary


def heatmap_csv(matrix: np.ndarray) -> str:
    """Rows are iterations 1..K, columns sentences s0..s{n-1}."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["iteration"] + [f"s{i}" for i in range(matrix.shape[1])])
    for k, row in enumerate(matrix, start=1):
        writer.writerow([k] + [float(v) for v in row])
    return buffer.getvalue()


def write_heatmap(path: str | Path, matrix: np.ndarray) -> Path:
    return atomic_write_text(path, heatmap_csv(matrix))
