"""JSON checkpoints holding config, vocabulary, parameters and optional optimizer state.

Floats are written with Python's shortest round-trip repr, so loading gives
back the exact same bits.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.config import ConfigError, ItsConfig, TrainConfig
from src.filesystem import atomic_write_text, require_file
from src.vocabulary import Vocabulary

from .params import ItsParameters, parameter_shapes

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "its-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Unreadable checkpoint or one that does not match its config."""


@dataclass
class Checkpoint:
    params: ItsParameters
    vocabulary: Vocabulary
    epoch: int = 0
    train_config: TrainConfig | None = None
    optimizer: dict | None = None

    @property
    def config(self) -> ItsConfig:
        return self.params.config


def _encode_array(value: np.ndarray) -> dict:
    return {"shape": list(value.shape), "data": [float(x) for x in np.ravel(value)]}


def _decode_array(entry: dict, name: str) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in entry["shape"])
        data = np.array(entry["data"], dtype=np.float64)
        return data.reshape(shape)
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"Parameter '{name}' is malformed: {e}") from None


def _encode_optimizer(state: dict) -> dict:
    encoded = {k: v for k, v in state.items() if k not in ("m", "v")}
    for key in ("m", "v"):
        encoded[key] = {name: _encode_array(value) for name, value in state[key].items()}
    return encoded


def _decode_optimizer(data: dict) -> dict:
    decoded = {k: v for k, v in data.items() if k not in ("m", "v")}
    for key in ("m", "v"):
        decoded[key] = {name: _decode_array(entry, f"optimizer.{key}.{name}") for name, entry in data[key].items()}
    return decoded


def checkpoint_to_json(checkpoint: Checkpoint) -> str:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": checkpoint.params.config.to_dict(),
        "vocabulary": checkpoint.vocabulary.tokens(),
        "epoch": checkpoint.epoch,
        "parameters": {name: _encode_array(value) for name, value in checkpoint.params.arrays.items()},
    }
    if checkpoint.train_config is not None:
        payload["train"] = checkpoint.train_config.to_dict()
    if checkpoint.optimizer is not None:
        payload["optimizer"] = _encode_optimizer(checkpoint.optimizer)
    return json.dumps(payload, indent=2) + "\n"


def save_checkpoint(path: str | Path, checkpoint: Checkpoint) -> Path:
    if len(checkpoint.vocabulary) != checkpoint.params.vocab_size:
        raise CheckpointError(
            f"Vocabulary has {len(checkpoint.vocabulary)} entries but parameters expect {checkpoint.params.vocab_size}"
        )
    target = atomic_write_text(path, checkpoint_to_json(checkpoint))
    logger.info("Saved checkpoint %s (epoch %d)", target, checkpoint.epoch)
    return target


def checkpoint_from_json(text: str, source: str = "<checkpoint>") -> Checkpoint:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{source}: invalid JSON ({e})") from None
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{source}: not an ITS checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{source}: unsupported checkpoint version {payload.get('version')}")
    for key in ("config", "vocabulary", "parameters"):
        if key not in payload:
            raise CheckpointError(f"{source}: missing '{key}'")

    try:
        config = ItsConfig.from_dict(payload["config"])
        train_config = TrainConfig(**payload["train"]) if "train" in payload else None
    except (ConfigError, TypeError) as e:
        raise CheckpointError(f"{source}: bad config ({e})") from None
    try:
        vocabulary = Vocabulary(payload["vocabulary"])
    except (TypeError, ValueError) as e:
        raise CheckpointError(f"{source}: bad vocabulary ({e})") from None

    expected = parameter_shapes(config, len(vocabulary))
    stored = payload["parameters"]
    arrays = {}
    for name, shape in expected.items():
        if name not in stored:
            raise CheckpointError(f"{source}: parameter '{name}' missing for this config")
        value = _decode_array(stored[name], name)
        if value.shape != shape:
            raise CheckpointError(f"{source}: parameter '{name}' has shape {value.shape}, config expects {shape}")
        arrays[name] = value
    unexpected = sorted(set(stored) - set(expected))
    if unexpected:
        raise CheckpointError(f"{source}: parameters not used by this config: {', '.join(unexpected)}")

    optimizer = _decode_optimizer(payload["optimizer"]) if "optimizer" in payload else None
    return Checkpoint(
        params=ItsParameters(config, len(vocabulary), arrays),
        vocabulary=vocabulary,
        epoch=int(payload.get("epoch", 0)),
        train_config=train_config,
        optimizer=optimizer,
    )


def load_checkpoint(path: str | Path) -> Checkpoint:
    file_path = require_file(str(path))
    return checkpoint_from_json(file_path.read_text(encoding="utf-8"), source=str(path))
