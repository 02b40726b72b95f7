"""Vocabulary, token-id grids and pretrained embedding files."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from src.corpus import CorpusError, Document
from src.filesystem import require_file
from src.tensor import RngState

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1
RESERVED = (PAD_TOKEN, UNK_TOKEN)

DEFAULT_CAPACITY = 100_000
EMBEDDING_INIT_RANGE = 0.2


class EmbeddingFormatError(ValueError):
    """Embedding file line with the wrong shape or a non-numeric value."""


class Vocabulary:
    """Case-folded token <-> id map with PAD=0 and UNK=1 reserved."""

    def __init__(self, tokens: Iterable[str]):
        self._tokens = list(RESERVED)
        self._index = {token: i for i, token in enumerate(self._tokens)}
        for token in tokens:
            token = token.lower()
            if token in self._index:
                raise ValueError(f"Duplicate vocabulary token: '{token}'")
            self._index[token] = len(self._tokens)
            self._tokens.append(token)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self._index

    def id_of(self, token: str) -> int:
        return self._index.get(token.lower(), UNK_ID)

    def token_of(self, token_id: int) -> str:
        return self._tokens[token_id]

    def tokens(self) -> list[str]:
        """Non-reserved tokens in id order (the checkpoint form)."""
        return self._tokens[len(RESERVED) :]

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens


def build_vocabulary(documents: Iterable[Document], capacity: int = DEFAULT_CAPACITY) -> Vocabulary:
    """Most frequent tokens first (ties alphabetical); capacity counts PAD and UNK.

    Highlights are counted as well so oracle-only words are not all UNK.
    """
    if capacity < len(RESERVED):
        raise ValueError(f"Vocabulary capacity must be >= {len(RESERVED)}, got {capacity}")
    counts: Counter = Counter()
    for document in documents:
        for sentence in document.sentences:
            counts.update(token.lower() for token in sentence)
        for sentence in document.highlights or ():
            counts.update(token.lower() for token in sentence)
    for token in RESERVED:
        counts.pop(token, None)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = [token for token, _ in ranked[: capacity - len(RESERVED)]]
    if len(ranked) > len(kept):
        logger.info("Vocabulary capped at %d of %d distinct tokens", capacity, len(ranked) + len(RESERVED))
    return Vocabulary(kept)


def tokenize_and_pad(document: Document, vocab: Vocabulary, max_words: int) -> np.ndarray:
    """Map a document to an (n_s, max_words) id grid, cutting or right-padding with PAD."""
    if max_words < 1:
        raise ValueError(f"max_words must be >= 1, got {max_words}")
    if not document.sentences:
        raise CorpusError(f"Document '{document.id}' has no sentences")
    grid = np.full((len(document.sentences), max_words), PAD_ID, dtype=np.int64)
    for i, sentence in enumerate(document.sentences):
        ids = [vocab.id_of(token) for token in sentence[:max_words]]
        grid[i, : len(ids)] = ids
    return grid


@dataclass(frozen=True)
class EmbeddingMatrix:
    """One row per vocabulary id; the PAD row is zero."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def width(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]


def random_embeddings(vocab: Vocabulary, width: int, rng: RngState) -> EmbeddingMatrix:
    rows = rng.generator().uniform(-EMBEDDING_INIT_RANGE, EMBEDDING_INIT_RANGE, size=(len(vocab), width))
    rows[PAD_ID] = 0.0
    return EmbeddingMatrix(rows)


def _parse_line(raw: str, lineno: int, path: str) -> tuple[str, np.ndarray]:
    parts = raw.split()
    try:
        values = np.array([float(v) for v in parts[1:]], dtype=np.float64)
    except ValueError:
        raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric value in embedding line") from None
    if values.size == 0:
        raise EmbeddingFormatError(f"{path}:{lineno}: token '{parts[0]}' has no vector")
    if not np.all(np.isfinite(values)):
        raise EmbeddingFormatError(f"{path}:{lineno}: non-finite value in embedding line")
    return parts[0].lower(), values


def load_embeddings(path: str | Path, vocab: Vocabulary, rng: RngState, width: int | None = None) -> EmbeddingMatrix:
    """Read a "token v_1 ... v_E" text file into a matrix aligned with ``vocab``.

    Vocabulary tokens missing from the file get uniform[-0.2, 0.2] rows drawn
    from ``rng``; the first occurrence of a token wins. ``width`` is required
    only when the file may be empty.
    """
    file_path = require_file(str(path))
    found: dict[int, np.ndarray] = {}
    try:
        with open(file_path, encoding="utf-8") as f:
            for lineno, raw in enumerate(f, start=1):
                if not raw.strip():
                    continue
                token, values = _parse_line(raw, lineno, str(path))
                if width is None:
                    width = values.size
                elif values.size != width:
                    raise EmbeddingFormatError(
                        f"{path}:{lineno}: expected {width} values for '{token}', got {values.size}"
                    )
                if token in vocab and token != PAD_TOKEN:
                    found.setdefault(vocab.id_of(token), values)
    except UnicodeDecodeError as e:
        raise EmbeddingFormatError(f"{path}: not valid UTF-8 ({e.reason})") from None
    if width is None:
        raise EmbeddingFormatError(f"{path}: file is empty and no embedding width was given")

    matrix = random_embeddings(vocab, width, rng).rows.copy()
    for token_id, values in found.items():
        matrix[token_id] = values
    logger.info("Loaded %d of %d vocabulary vectors from %s", len(found), len(vocab), path)
    return EmbeddingMatrix(matrix)
