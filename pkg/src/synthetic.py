"""Synthetic marker corpus with labels known by construction.

Every document holds filler sentences plus exactly one sentence carrying the
marker token; the highlight is that sentence, so the gold label is its index.
"""

from __future__ import annotations

from dataclasses import dataclass

from src.corpus import Document
from src.tensor import RngState

MARKER_TOKEN = "zzmarker"


@dataclass(frozen=True)
class MarkerCorpusOptions:
    """Shape of a generated corpus.

    Attributes:
        documents: number of documents
        min_sentences / max_sentences: sentence count range per document (inclusive)
        min_words / max_words: token count range per sentence (inclusive)
        filler_words: size of the "w0".."wN" filler vocabulary
        min_marker_index: lowest index the marker sentence may occupy
    """

    documents: int = 32
    min_sentences: int = 5
    max_sentences: int = 8
    min_words: int = 4
    max_words: int = 8
    filler_words: int = 100
    min_marker_index: int = 0

    def __post_init__(self):
        if self.documents < 1:
            raise ValueError(f"documents must be >= 1, got {self.documents}")
        if not 1 <= self.min_sentences <= self.max_sentences:
            raise ValueError(f"bad sentence range [{self.min_sentences}, {self.max_sentences}]")
        if not 1 <= self.min_words <= self.max_words:
            raise ValueError(f"bad word range [{self.min_words}, {self.max_words}]")
        if not 0 <= self.min_marker_index < self.min_sentences:
            raise ValueError(
                f"min_marker_index must be in [0, {self.min_sentences - 1}], got {self.min_marker_index}"
            )


def generate_marker_corpus(options: MarkerCorpusOptions, rng: RngState) -> list[Document]:
    """Deterministic for a given seed; document i draws from its own sub-stream."""
    documents = []
    for index in range(options.documents):
        gen = rng.generator(index)
        n_sentences = int(gen.integers(options.min_sentences, options.max_sentences + 1))
        marker_at = int(gen.integers(options.min_marker_index, n_sentences))
        sentences = []
        for i in range(n_sentences):
            length = int(gen.integers(options.min_words, options.max_words + 1))
            words = [f"w{k}" for k in gen.integers(0, options.filler_words, size=length)]
            if i == marker_at:
                words[int(gen.integers(0, length))] = MARKER_TOKEN
            sentences.append(words)
        labels = [1 if i == marker_at else 0 for i in range(n_sentences)]
        documents.append(
            Document.create(
                id=f"synth-{index:04d}",
                sentences=sentences,
                highlights=[sentences[marker_at]],
                labels=labels,
            )
        )
    return documents
