"""Pre-tokenized JSONL corpora.

One JSON object per line:
{"id": "d1", "sentences": [["tok", ...], ...], "highlights": [[...]], "labels": [0, 1, ...]}
"highlights" and "labels" are optional.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import jsonlines

from src.filesystem import atomic_write_text, require_file
from src.validation import validate_record

logger = logging.getLogger(__name__)

Sentence = tuple[str, ...]


class CorpusError(ValueError):
    """Malformed corpus line or document."""

    def __init__(self, message: str, path: str | None = None, lineno: int | None = None):
        self.path = path
        self.lineno = lineno
        prefix = f"{path}:{lineno}: " if path is not None and lineno is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Document:
    """A tokenized article with optional gold highlights and sentence labels."""

    id: str
    sentences: tuple[Sentence, ...]
    highlights: tuple[Sentence, ...] | None = None
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.sentences:
            raise CorpusError(f"Document '{self.id}' has no sentences")
        if any(len(s) == 0 for s in self.sentences):
            raise CorpusError(f"Document '{self.id}' has an empty sentence")
        if self.labels is not None and len(self.labels) != len(self.sentences):
            raise CorpusError(
                f"Document '{self.id}' has {len(self.labels)} labels for {len(self.sentences)} sentences"
            )

    @classmethod
    def create(
        cls,
        id: str,
        sentences: Iterable[Iterable[str]],
        highlights: Iterable[Iterable[str]] | None = None,
        labels: Iterable[int] | None = None,
    ) -> Document:
        return cls(
            id=id,
            sentences=tuple(tuple(s) for s in sentences),
            highlights=None if highlights is None else tuple(tuple(s) for s in highlights),
            labels=None if labels is None else tuple(int(b) for b in labels),
        )

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    @property
    def has_highlights(self) -> bool:
        return bool(self.highlights) and any(self.highlights)

    def with_labels(self, labels: Sequence[int]) -> Document:
        return replace(self, labels=tuple(int(b) for b in labels))

    def to_record(self) -> dict:
        record: dict = {"id": self.id, "sentences": [list(s) for s in self.sentences]}
        if self.highlights is not None:
            record["highlights"] = [list(s) for s in self.highlights]
        if self.labels is not None:
            record["labels"] = list(self.labels)
        return record


def document_from_record(record: dict, path: str | None = None, lineno: int | None = None) -> Document:
    result = validate_record(record)
    if not result.valid:
        raise CorpusError(result.first_error(), path=path, lineno=lineno)
    for warning in result.warnings:
        logger.warning("%s:%s: %s", path, lineno, warning.message)
    return Document.create(
        id=record["id"],
        sentences=record["sentences"],
        highlights=record.get("highlights"),
        labels=record.get("labels"),
    )


def read_corpus(path: str | Path) -> Iterator[Document]:
    """Stream documents from a JSONL file in file order.

    Raises CorpusError naming the line for undecodable or invalid records and
    FileNotFoundError when the file is missing.
    """
    file_path = require_file(str(path))
    with jsonlines.open(file_path, mode="r") as reader:
        try:
            for lineno, record in enumerate(reader.iter(skip_empty=False), start=1):
                yield document_from_record(record, path=str(path), lineno=lineno)
        except jsonlines.InvalidLineError as e:
            raise CorpusError(f"invalid JSON: {e}", path=str(path), lineno=e.lineno) from None


def load_corpus(path: str | Path) -> list[Document]:
    return list(read_corpus(path))


def write_records(path: str | Path, records: Iterable[dict]) -> int:
    """Atomically write JSON objects one per line; returns the number written."""
    buffer = io.StringIO()
    count = 0
    with jsonlines.Writer(buffer, compact=True) as writer:
        for record in records:
            writer.write(record)
            count += 1
    atomic_write_text(path, buffer.getvalue())
    return count


def write_corpus(path: str | Path, documents: Iterable[Document]) -> int:
    return write_records(path, (document.to_record() for document in documents))
