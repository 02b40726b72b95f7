"""Full forward pass: encode once, polish the document representation K times, label."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from src.config import ItsConfig
from src.tensor import Tensor, sigmoid

from .cells import (
    apply_dropout,
    auxiliary_scores,
    decode_features,
    encode_context,
    encode_sentences,
    init_doc_repr,
    iterate_doc,
    label_logits,
    selective_gate,
    selective_pass,
)
from .params import ItsParameters, block_prefix

logger = logging.getLogger(__name__)


@dataclass
class ForwardResult:
    """Scores plus per-iteration diagnostics.

    Attributes:
        scores: (n_s,) extraction probabilities
        logits: (n_s,) pre-sigmoid values
        doc_reprs: D_0 ... D_K as arrays
        auxiliary: (K, n_s) head applied to each iteration's features alone
        gates: per iteration (n_s, n_H) selective gates (empty when selective reading is off)
        gate_logits: per iteration pre-softmax gate values
        empty_sentences: (n_s,) True where a sentence was all padding
    """

    scores: Tensor
    logits: Tensor
    doc_reprs: list[np.ndarray]
    auxiliary: np.ndarray
    gates: list[np.ndarray] = field(default_factory=list)
    gate_logits: list[np.ndarray] = field(default_factory=list)
    context: np.ndarray | None = None
    empty_sentences: np.ndarray | None = None

    def score_array(self) -> np.ndarray:
        return np.array(self.scores.data)


def forward(
    token_ids: np.ndarray,
    weights: ItsParameters | Mapping[str, Tensor],
    config: ItsConfig,
    train_mode: bool = False,
    gen: np.random.Generator | None = None,
) -> ForwardResult:
    """Score every sentence of one document.

    ``weights`` is either a parameter set (evaluated as constants) or a
    name -> Tensor mapping, e.g. taped leaves for training. Dropout is applied
    only when ``train_mode`` is set and ``gen`` supplies the masks.
    """
    P = weights.as_tensors() if isinstance(weights, ItsParameters) else weights
    token_ids = np.asarray(token_ids, dtype=np.int64)
    if token_ids.ndim != 2 or token_ids.shape[0] == 0:
        raise ValueError(f"forward: expected a non-empty (n_s, max_words) id grid, got shape {token_ids.shape}")
    keep = config.keep_prob if train_mode else 1.0
    masks = gen if train_mode else None

    sentences, empty = encode_sentences(token_ids, P["embedding"], keep, masks)
    if empty.any():
        logger.warning("%d of %d sentences are all padding", int(empty.sum()), len(empty))
    context = encode_context(sentences, P)
    doc_repr = init_doc_repr(context.forward, context.backward, P)
    contextual = apply_dropout(context.combined, keep, masks)

    doc_reprs = [doc_repr.data]
    features = []
    gates_seen, logits_seen = [], []
    for k in range(1, config.iterations + 1):
        prefix = block_prefix(config, k)
        gates = None
        if config.use_selective_reading:
            gates, gate_values = selective_gate(contextual, doc_repr, P, f"{prefix}.gate")
            gates_seen.append(gates.data)
            logits_seen.append(gate_values.data)
        reading = selective_pass(contextual, gates, P, f"{prefix}.select")
        doc_repr = iterate_doc(reading.final, doc_repr, P, f"{prefix}.unit")
        doc_reprs.append(doc_repr.data)
        features.append(apply_dropout(decode_features(contextual, doc_repr, P, f"{prefix}.decoder"), keep, masks))

    logits = label_logits(features, P, config.use_concat_labeling)
    return ForwardResult(
        scores=sigmoid(logits),
        logits=logits,
        doc_reprs=doc_reprs,
        auxiliary=auxiliary_scores([f.data for f in features], P, config.use_concat_labeling),
        gates=gates_seen,
        gate_logits=logits_seen,
        context=contextual.data,
        empty_sentences=empty,
    )


def predict(token_ids: np.ndarray, params: ItsParameters) -> np.ndarray:
    """Inference-mode scores as a plain array."""
    return forward(token_ids, params, params.config).score_array()
