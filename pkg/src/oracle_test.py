"""Tests for the greedy label oracle."""

from itertools import combinations

import numpy as np
import pytest

from src.corpus import CorpusError, Document
from src.oracle import (
    LabelingStats,
    greedy_oracle,
    greedy_oracle_labels,
    label_documents,
    subset_score,
)


def _random_document(rng, index):
    words = [f"t{k}" for k in range(12)]
    n = int(rng.integers(1, 9))
    sentences = [[words[k] for k in rng.integers(0, 12, size=rng.integers(2, 7))] for _ in range(n)]
    highlights = [[words[k] for k in rng.integers(0, 12, size=rng.integers(3, 9))]]
    return Document.create(f"r{index}", sentences, highlights=highlights)


def _best_subset_score(document, max_select):
    best = 0.0
    for size in range(1, max_select + 1):
        for subset in combinations(range(document.n_sentences), size):
            best = max(best, subset_score(document, subset))
    return best


# ##################################################################
# test greedy_oracle_labels on hand examples
def test_verbatim_sentence_selected_first():
    doc = Document.create(
        "d",
        [["the", "market", "fell"], ["rain", "is", "due"], ["shares", "rose", "sharply", "today"], ["the", "end"]],
        highlights=[["shares", "rose", "sharply", "today"]],
    )
    result = greedy_oracle(doc)
    assert result.order[0] == 2
    assert greedy_oracle_labels(doc) == [0, 0, 1, 0]


def test_no_overlap_gives_all_zero():
    doc = Document.create("d", [["a", "b"], ["c"]], highlights=[["x", "y"]])
    assert greedy_oracle_labels(doc) == [0, 0]


def test_single_sentence_document():
    doc = Document.create("d", [["a", "b", "c"]], highlights=[["a", "b"]])
    assert greedy_oracle_labels(doc) == [1]


def test_missing_highlights_is_error():
    with pytest.raises(CorpusError, match="no gold summary"):
        greedy_oracle_labels(Document.create("d", [["a"]]))


def test_ties_go_to_lowest_index():
    doc = Document.create("d", [["x"], ["a", "b"], ["a", "b"]], highlights=[["a", "b"]])
    assert greedy_oracle(doc).order == (1,)


def test_scorer_variants_are_selectable():
    doc = Document.create("d", [["a", "b"], ["c", "d"]], highlights=[["a", "b", "c", "d"]])
    for scorer in ("mean_f1", "rouge1_f1", "rouge2_f1", "mean_recall"):
        assert sum(greedy_oracle_labels(doc, scorer=scorer)) >= 1
    with pytest.raises(ValueError, match="Unknown oracle scorer"):
        greedy_oracle_labels(doc, scorer="bleu")


# ##################################################################
# test soundness against brute force
def test_greedy_never_beats_brute_force():
    rng = np.random.default_rng(42)
    for index in range(200):
        doc = _random_document(rng, index)
        result = greedy_oracle(doc, max_select=3)
        assert sum(result.labels) == len(result.order) <= 3
        assert list(result.scores) == sorted(result.scores)
        assert result.final_score <= _best_subset_score(doc, 3) + 1e-12


def test_max_select_respected():
    rng = np.random.default_rng(8)
    for index in range(50):
        doc = _random_document(rng, index)
        assert sum(greedy_oracle_labels(doc, max_select=1)) <= 1


# ##################################################################
# test label_documents
def test_label_documents_skips_and_counts():
    docs = [
        Document.create("a", [["x", "y"]], highlights=[["x"]]),
        Document.create("b", [["x"]]),
        Document.create("c", [["p"], ["q"]], highlights=[["q"]]),
    ]
    stats = LabelingStats()
    labeled = list(label_documents(docs, stats=stats))
    assert [d.id for d in labeled] == ["a", "c"]
    assert labeled[1].labels == (0, 1)
    assert (stats.labeled, stats.skipped) == (2, 1)
