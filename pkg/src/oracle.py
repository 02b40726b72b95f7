"""Greedy ROUGE oracle turning abstractive highlights into sentence labels."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from tqdm import tqdm

from src.corpus import CorpusError, Document
from src.rouge import join_sentences, rouge_n

logger = logging.getLogger(__name__)

DEFAULT_MAX_SELECT = 3

OracleScorer = Callable[[Sequence[str], Sequence[str]], float]


def _mean_f1(candidate: Sequence[str], reference: Sequence[str]) -> float:
    return (rouge_n(candidate, reference, 1).f1 + rouge_n(candidate, reference, 2).f1) / 2


def _rouge1_f1(candidate: Sequence[str], reference: Sequence[str]) -> float:
    return rouge_n(candidate, reference, 1).f1


def _rouge2_f1(candidate: Sequence[str], reference: Sequence[str]) -> float:
    return rouge_n(candidate, reference, 2).f1


def _mean_recall(candidate: Sequence[str], reference: Sequence[str]) -> float:
    return (rouge_n(candidate, reference, 1).recall + rouge_n(candidate, reference, 2).recall) / 2


SCORERS: dict[str, OracleScorer] = {
    "mean_f1": _mean_f1,
    "rouge1_f1": _rouge1_f1,
    "rouge2_f1": _rouge2_f1,
    "mean_recall": _mean_recall,
}


def get_scorer(name: str) -> OracleScorer:
    if name not in SCORERS:
        raise ValueError(f"Unknown oracle scorer '{name}'. Valid scorers: {', '.join(SCORERS)}")
    return SCORERS[name]


@dataclass(frozen=True)
class OracleResult:
    """Greedy picks in selection order with the oracle score after each pick."""

    labels: tuple[int, ...]
    order: tuple[int, ...]
    scores: tuple[float, ...]

    @property
    def final_score(self) -> float:
        return self.scores[-1] if self.scores else 0.0


def subset_score(document: Document, indices: Iterable[int], scorer: str = "mean_f1") -> float:
    """Oracle score of a sentence subset, joined in document order."""
    if not document.has_highlights:
        raise CorpusError(f"Document '{document.id}' has no gold summary")
    chosen = [document.sentences[i] for i in sorted(indices)]
    return get_scorer(scorer)(join_sentences(chosen), join_sentences(document.highlights))


def greedy_oracle(document: Document, max_select: int = DEFAULT_MAX_SELECT, scorer: str = "mean_f1") -> OracleResult:
    """Add the sentence that most improves the oracle score until none strictly improves it.

    Ties go to the lowest sentence index.
    """
    if max_select < 1:
        raise ValueError(f"max_select must be >= 1, got {max_select}")
    if not document.has_highlights:
        raise CorpusError(f"Document '{document.id}' has no gold summary")
    score_fn = get_scorer(scorer)
    reference = join_sentences(document.highlights)

    selected: list[int] = []
    scores: list[float] = []
    current = 0.0
    while len(selected) < max_select:
        best_index, best_score = -1, current
        for i in range(document.n_sentences):
            if i in selected:
                continue
            candidate = join_sentences(document.sentences[j] for j in sorted(selected + [i]))
            score = score_fn(candidate, reference)
            if score > best_score:
                best_index, best_score = i, score
        if best_index < 0:
            break
        selected.append(best_index)
        scores.append(best_score)
        current = best_score

    labels = [0] * document.n_sentences
    for i in selected:
        labels[i] = 1
    return OracleResult(labels=tuple(labels), order=tuple(selected), scores=tuple(scores))


def greedy_oracle_labels(document: Document, max_select: int = DEFAULT_MAX_SELECT, scorer: str = "mean_f1") -> list[int]:
    return list(greedy_oracle(document, max_select, scorer).labels)


@dataclass
class LabelingStats:
    labeled: int = 0
    skipped: int = 0


def label_documents(
    documents: Iterable[Document],
    max_select: int = DEFAULT_MAX_SELECT,
    scorer: str = "mean_f1",
    stats: LabelingStats | None = None,
    progress: bool = False,
) -> Iterator[Document]:
    """Attach oracle labels; documents without highlights are skipped and counted."""
    stats = stats if stats is not None else LabelingStats()
    for document in tqdm(documents, desc="labeling", unit="doc", disable=not progress):
        if not document.has_highlights:
            stats.skipped += 1
            logger.warning("Skipping document '%s': no gold summary", document.id)
            continue
        stats.labeled += 1
        yield document.with_labels(greedy_oracle_labels(document, max_select, scorer))
