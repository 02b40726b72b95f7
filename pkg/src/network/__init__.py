"""Iterative extractive summarization network."""

from .cells import (
    decode_features,
    encode_context,
    gru_step,
    init_doc_repr,
    iterate_doc,
    label_scores,
    positional_encode,
    positional_weights,
    selective_gate,
    selective_pass,
)
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .model import ForwardResult, forward, predict
from .params import ItsParameters, init_parameters, parameter_count, parameter_shapes

__all__ = [
    "decode_features",
    "encode_context",
    "gru_step",
    "init_doc_repr",
    "iterate_doc",
    "label_scores",
    "positional_encode",
    "positional_weights",
    "selective_gate",
    "selective_pass",
    "Checkpoint",
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
    "ForwardResult",
    "forward",
    "predict",
    "ItsParameters",
    "init_parameters",
    "parameter_count",
    "parameter_shapes",
]
