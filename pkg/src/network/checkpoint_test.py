"""Tests for checkpoint save/load."""

import json

import numpy as np
import pytest

from src.config import ItsConfig, TrainConfig
from src.tensor import RngState
from src.vocabulary import Vocabulary

from .checkpoint import (
    CHECKPOINT_FORMAT,
    Checkpoint,
    CheckpointError,
    checkpoint_from_json,
    checkpoint_to_json,
    load_checkpoint,
    save_checkpoint,
)
from .model import predict
from .params import init_parameters

CONFIG = ItsConfig(iterations=2, hidden=4, embedding=3, max_words=4, keep_prob=1.0)
VOCAB = Vocabulary(["the", "cat", "sat", "mat"])


@pytest.fixture
def checkpoint():
    return Checkpoint(params=init_parameters(CONFIG, len(VOCAB), RngState(3)), vocabulary=VOCAB, epoch=4)


def _payload(checkpoint):
    return json.loads(checkpoint_to_json(checkpoint))


# ##################################################################
# test round trip
def test_round_trip_is_bit_exact(checkpoint, tmp_path):
    path = save_checkpoint(tmp_path / "model.json", checkpoint)
    loaded = load_checkpoint(path)
    assert loaded.config == CONFIG
    assert loaded.vocabulary == VOCAB
    assert loaded.epoch == 4
    for name in checkpoint.params.names():
        np.testing.assert_array_equal(loaded.params.arrays[name], checkpoint.params.arrays[name])
    grid = np.array([[2, 3, 4, 0], [5, 1, 0, 0]])
    np.testing.assert_array_equal(predict(grid, loaded.params), predict(grid, checkpoint.params))


def test_optimizer_and_train_config_survive(checkpoint, tmp_path):
    checkpoint.train_config = TrainConfig(epochs=3)
    checkpoint.optimizer = {
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "step": 7,
        "m": {"head.b4": np.array([0.125])},
        "v": {"head.b4": np.array([1 / 3])},
    }
    loaded = load_checkpoint(save_checkpoint(tmp_path / "model.json", checkpoint))
    assert loaded.train_config == TrainConfig(epochs=3)
    assert loaded.optimizer["step"] == 7
    assert loaded.optimizer["v"]["head.b4"][0] == 1 / 3


def test_file_is_indented_json(checkpoint):
    text = checkpoint_to_json(checkpoint)
    assert text.startswith("{\n  ")
    assert _payload(checkpoint)["format"] == CHECKPOINT_FORMAT


# ##################################################################
# test rejection of bad files
def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "nope.json")


def test_invalid_json():
    with pytest.raises(CheckpointError, match="invalid JSON"):
        checkpoint_from_json("{not json")


def test_wrong_format_and_version(checkpoint):
    payload = _payload(checkpoint)
    payload["format"] = "something-else"
    with pytest.raises(CheckpointError, match="not an ITS checkpoint"):
        checkpoint_from_json(json.dumps(payload))
    payload = _payload(checkpoint)
    payload["version"] = 99
    with pytest.raises(CheckpointError, match="version"):
        checkpoint_from_json(json.dumps(payload))


def test_config_parameter_mismatch(checkpoint):
    payload = _payload(checkpoint)
    payload["config"]["hidden"] = 5
    with pytest.raises(CheckpointError, match="shape"):
        checkpoint_from_json(json.dumps(payload))


def test_missing_and_extra_parameters(checkpoint):
    payload = _payload(checkpoint)
    del payload["parameters"]["head.W4"]
    with pytest.raises(CheckpointError, match="'head.W4' missing"):
        checkpoint_from_json(json.dumps(payload))
    payload = _payload(checkpoint)
    payload["parameters"]["bogus.W"] = {"shape": [1], "data": [0.0]}
    with pytest.raises(CheckpointError, match="not used"):
        checkpoint_from_json(json.dumps(payload))


def test_unknown_config_key(checkpoint):
    payload = _payload(checkpoint)
    payload["config"]["colour"] = "blue"
    with pytest.raises(CheckpointError, match="bad config"):
        checkpoint_from_json(json.dumps(payload))


def test_duplicate_vocabulary(checkpoint):
    payload = _payload(checkpoint)
    payload["vocabulary"].append("cat")
    with pytest.raises(CheckpointError, match="vocabulary"):
        checkpoint_from_json(json.dumps(payload))


def test_save_rejects_vocabulary_size_mismatch(checkpoint, tmp_path):
    checkpoint.vocabulary = Vocabulary(["only"])
    with pytest.raises(CheckpointError):
        save_checkpoint(tmp_path / "model.json", checkpoint)
