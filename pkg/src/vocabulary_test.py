"""Tests for vocabulary, padding and embedding files."""

import numpy as np
import pytest

from src.corpus import Document
from src.tensor import RngState
from src.vocabulary import (
    PAD_ID,
    UNK_ID,
    EmbeddingFormatError,
    Vocabulary,
    build_vocabulary,
    load_embeddings,
    random_embeddings,
    tokenize_and_pad,
)


@pytest.fixture
def vocab():
    return Vocabulary(["the", "cat", "sat"])


# ##################################################################
# test Vocabulary and build_vocabulary
def test_reserved_ids(vocab):
    assert vocab.id_of("<pad>") == PAD_ID
    assert vocab.id_of("unseen") == UNK_ID
    assert vocab.id_of("The") == vocab.id_of("the") == 2


def test_round_trip_on_non_reserved_ids(vocab):
    for token_id in range(2, len(vocab)):
        assert vocab.id_of(vocab.token_of(token_id)) == token_id


def test_build_orders_by_frequency_then_token():
    docs = [
        Document.create("a", [["b", "a", "c"], ["A", "c"]]),
        Document.create("b", [["c"]], highlights=[["d"]]),
    ]
    assert build_vocabulary(docs).tokens() == ["c", "a", "b", "d"]


def test_build_respects_capacity():
    docs = [Document.create("a", [["x", "y", "y", "z", "z", "z"]])]
    vocab = build_vocabulary(docs, capacity=4)
    assert len(vocab) == 4
    assert vocab.tokens() == ["z", "y"]


def test_duplicate_token_rejected():
    with pytest.raises(ValueError):
        Vocabulary(["a", "A"])


# ##################################################################
# test tokenize_and_pad
def test_cuts_long_sentences(vocab):
    doc = Document.create("d", [["cat"] * 72])
    grid = tokenize_and_pad(doc, vocab, 70)
    assert grid.shape == (1, 70)
    assert np.all(grid == vocab.id_of("cat"))


def test_pads_short_sentences(vocab):
    grid = tokenize_and_pad(Document.create("d", [["cat"]]), vocab, 3)
    assert grid.tolist() == [[vocab.id_of("cat"), PAD_ID, PAD_ID]]


def test_unknown_token_maps_to_unk(vocab):
    grid = tokenize_and_pad(Document.create("d", [["the", "dog"]]), vocab, 2)
    assert grid[0, 1] == UNK_ID


def test_shape_is_always_sentences_by_max_words(vocab):
    doc = Document.create("d", [["the"] * n for n in (1, 5, 9)])
    assert tokenize_and_pad(doc, vocab, 4).shape == (3, 4)


# ##################################################################
# test load_embeddings
def test_reads_file_vectors(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("a 1.0 2.0\n")
    matrix = load_embeddings(path, Vocabulary(["a"]), RngState(3))
    assert matrix.rows[2].tolist() == [1.0, 2.0]
    assert matrix.rows[PAD_ID].tolist() == [0.0, 0.0]


def test_missing_tokens_random_in_range(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("a 1.0 2.0 3.0\n")
    matrix = load_embeddings(path, Vocabulary(["a", "b"]), RngState(3))
    row = matrix.rows[3]
    assert np.all((row >= -0.2) & (row <= 0.2))
    assert np.any(row != 0.0)


def test_empty_file_needs_width(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("")
    matrix = load_embeddings(path, Vocabulary(["a", "b"]), RngState(3), width=4)
    assert matrix.rows.shape == (4, 4)
    assert np.all(matrix.rows[PAD_ID] == 0.0)
    assert np.all(np.abs(matrix.rows[2:]) <= 0.2)
    with pytest.raises(EmbeddingFormatError):
        load_embeddings(path, Vocabulary(["a"]), RngState(3))


def test_inconsistent_width_names_line(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("a 1.0 2.0\nb 1.0\n")
    with pytest.raises(EmbeddingFormatError, match="vectors.txt:2"):
        load_embeddings(path, Vocabulary(["a", "b"]), RngState(3))


def test_non_numeric_value(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text("a 1.0 x\n")
    with pytest.raises(EmbeddingFormatError, match=":1"):
        load_embeddings(path, Vocabulary(["a"]), RngState(3))


def test_unreadable_file():
    with pytest.raises(FileNotFoundError):
        load_embeddings("/nonexistent/vectors.txt", Vocabulary([]), RngState(3))


def test_random_embeddings_deterministic():
    vocab = Vocabulary(["a", "b"])
    first = random_embeddings(vocab, 5, RngState(9)).rows
    second = random_embeddings(vocab, 5, RngState(9)).rows
    assert np.array_equal(first, second)
    assert not first.flags.writeable
