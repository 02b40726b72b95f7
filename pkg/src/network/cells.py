"""Building blocks of the forward pass, composed from tensor primitives.

``P`` is always a mapping from parameter name to Tensor (taped leaves during
training, constants at inference).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from src import tensor as T
from src.tensor import ShapeError, Tensor

Params = Mapping[str, Tensor]


# ##################################################################
# positional encoding
# weights l[j, d] = (1 - j/n_w) - (d/E) * (1 - 2j/n_w), j and d counted from 1
def positional_weights(n_words: int, width: int) -> np.ndarray:
    if n_words < 1 or width < 1:
        raise ValueError(f"positional_weights needs n_words >= 1 and width >= 1, got {n_words}, {width}")
    j = np.arange(1, n_words + 1, dtype=np.float64)[:, None]
    d = np.arange(1, width + 1, dtype=np.float64)[None, :]
    return (1.0 - j / n_words) - (d / width) * (1.0 - 2.0 * j / n_words)


def positional_encode(words: Tensor, mask: np.ndarray | None = None) -> tuple[Tensor, bool]:
    """Pool an (n_w, E) word matrix into one sentence vector.

    Rows where ``mask`` is False (padding) are left out of both the sum and
    n_w. Returns the vector and whether the sentence was all padding.
    """
    n_rows, width = words.shape
    keep = np.ones(n_rows, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    n_words = int(keep.sum())
    weights = np.zeros((n_rows, width))
    if n_words > 0:
        weights[keep] = positional_weights(n_words, width)
    return T.matmul(np.ones(n_rows), T.multiply(words, weights)), n_words == 0


def sentence_weight_grid(token_ids: np.ndarray, width: int, pad_id: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Positional weights for every (sentence, slot) of an id grid.

    Returns an (n_s * max_words, E) weight matrix aligned with the flattened
    grid, and a flag per sentence that is True when it was all padding.
    """
    n_sentences, max_words = token_ids.shape
    weights = np.zeros((n_sentences, max_words, width))
    empty = np.zeros(n_sentences, dtype=bool)
    for i in range(n_sentences):
        keep = token_ids[i] != pad_id
        n_words = int(keep.sum())
        if n_words == 0:
            empty[i] = True
            continue
        weights[i, keep] = positional_weights(n_words, width)
    return weights.reshape(n_sentences * max_words, width), empty


def encode_sentences(
    token_ids: np.ndarray,
    embedding: Tensor,
    keep_prob: float = 1.0,
    gen: np.random.Generator | None = None,
    pad_id: int = 0,
) -> tuple[Tensor, np.ndarray]:
    """Embed and position-encode an id grid into an (n_s, E) sentence matrix."""
    n_sentences, max_words = token_ids.shape
    width = embedding.shape[1]
    words = T.gather_rows(embedding, token_ids.reshape(-1))
    words = apply_dropout(words, keep_prob, gen)
    weights, empty = sentence_weight_grid(token_ids, width, pad_id)
    pooling = np.kron(np.eye(n_sentences), np.ones((1, max_words)))
    return T.matmul(pooling, T.multiply(words, weights)), empty


def apply_dropout(x: Tensor, keep_prob: float, gen: np.random.Generator | None) -> Tensor:
    if keep_prob >= 1.0 or gen is None:
        return x
    return T.dropout(x, keep_prob, gen.random(x.shape) < keep_prob)


# ##################################################################
# recurrent cells
def gru_step(x, h_prev, P: Params, prefix: str, gate=None) -> Tensor:
    """One GRU step; ``gate`` replaces the learned update gate when given.

    u = sigmoid(x W_u + h U_u + b_u), r likewise,
    candidate = tanh(x W_h + r * (h U_h) + b_h), h = u * candidate + (1 - u) * h_prev.
    """
    x, h_prev = T.as_tensor(x), T.as_tensor(h_prev)
    if gate is None:
        update = T.sigmoid(x @ P[f"{prefix}.w_u"] + h_prev @ P[f"{prefix}.u_u"] + P[f"{prefix}.b_u"])
    else:
        update = T.as_tensor(gate)
        if update.shape != h_prev.shape:
            raise ShapeError("gru_step", update.shape, h_prev.shape)
    reset = T.sigmoid(x @ P[f"{prefix}.w_r"] + h_prev @ P[f"{prefix}.u_r"] + P[f"{prefix}.b_r"])
    candidate = T.tanh(x @ P[f"{prefix}.w_h"] + reset * (h_prev @ P[f"{prefix}.u_h"]) + P[f"{prefix}.b_h"])
    return update * candidate + (1.0 - update) * h_prev


def run_gru(inputs: Tensor, h0, P: Params, prefix: str, reverse: bool = False, gates: Tensor | None = None) -> list[Tensor]:
    """Run a GRU over the rows of ``inputs``; states are returned in row order."""
    n_steps = inputs.shape[0]
    if gates is not None and gates.shape[0] != n_steps:
        raise ShapeError("run_gru", gates.shape, inputs.shape)
    order = range(n_steps - 1, -1, -1) if reverse else range(n_steps)
    states: list[Tensor | None] = [None] * n_steps
    h = T.as_tensor(h0)
    for i in order:
        gate = None if gates is None else T.take_row(gates, i)
        h = gru_step(T.take_row(inputs, i), h, P, prefix, gate=gate)
        states[i] = h
    return states


@dataclass
class ContextStates:
    forward: list[Tensor]
    backward: list[Tensor]
    combined: Tensor  # (n_s, n_H), forward + backward


def encode_context(sentences: Tensor, P: Params, prefix: str = "context") -> ContextStates:
    """Bidirectional GRU over sentence vectors from zero states; directions summed."""
    hidden = P[f"{prefix}.fwd.b_h"].shape[0]
    zero = np.zeros(hidden)
    forward = run_gru(sentences, zero, P, f"{prefix}.fwd")
    backward = run_gru(sentences, zero, P, f"{prefix}.bwd", reverse=True)
    return ContextStates(forward, backward, T.stack(forward) + T.stack(backward))


def init_doc_repr(forward: Sequence[Tensor], backward: Sequence[Tensor], P: Params, prefix: str = "doc_init") -> Tensor:
    """D_0 = tanh(W mean_i [fwd_i; bwd_i] + b)."""
    if not forward or len(forward) != len(backward):
        raise ShapeError("init_doc_repr", (len(forward),), (len(backward),))
    pooled = T.mean(T.concat([T.stack(forward), T.stack(backward)], axis=1), axis=0)
    return T.tanh(pooled @ P[f"{prefix}.W"] + P[f"{prefix}.b"])


# ##################################################################
# selective reading
def gate_logits(context: Tensor, doc_repr, P: Params, prefix: str) -> Tensor:
    """F_i = W2 tanh(W1 [s_i * D; s_i; D] + b1) + b2 for every sentence at once."""
    n_sentences = context.shape[0]
    broadcast = T.multiply(np.ones((n_sentences, 1)), doc_repr)
    features = T.concat([context * broadcast, context, broadcast], axis=1)
    hidden = T.tanh(features @ P[f"{prefix}.W1"] + P[f"{prefix}.b1"])
    return hidden @ P[f"{prefix}.W2"] + P[f"{prefix}.b2"]


def selective_gate(context: Tensor, doc_repr, P: Params, prefix: str) -> tuple[Tensor, Tensor]:
    """Gates normalised across sentences per hidden dimension, plus their logits."""
    logits = gate_logits(context, doc_repr, P, prefix)
    return T.softmax(logits, axis=0), logits


@dataclass
class SelectivePass:
    forward: list[Tensor]
    backward: list[Tensor]
    outputs: Tensor  # (n_s, n_H)
    final: Tensor  # last forward state + last backward state


def selective_pass(context: Tensor, gates: Tensor | None, P: Params, prefix: str, h0=None) -> SelectivePass:
    """Bidirectional pass whose update gate is ``gates`` (standard GRU when None)."""
    if gates is not None and gates.shape != context.shape:
        raise ShapeError("selective_pass", gates.shape, context.shape)
    if h0 is None:
        h0 = np.zeros(context.shape[1])
    forward = run_gru(context, h0, P, f"{prefix}.fwd", gates=gates)
    backward = run_gru(context, h0, P, f"{prefix}.bwd", reverse=True, gates=gates)
    return SelectivePass(forward, backward, T.stack(forward) + T.stack(backward), forward[-1] + backward[0])


def iterate_doc(final_state, doc_repr, P: Params, prefix: str) -> Tensor:
    """D_k = GRU(final_state, D_{k-1})."""
    return gru_step(final_state, doc_repr, P, prefix)


def decode_features(context: Tensor, doc_repr, P: Params, prefix: str) -> Tensor:
    """Both decoder directions start from D_k; outputs summed per sentence."""
    forward = run_gru(context, doc_repr, P, f"{prefix}.fwd")
    backward = run_gru(context, doc_repr, P, f"{prefix}.bwd", reverse=True)
    return T.stack(forward) + T.stack(backward)


# ##################################################################
# labeling head
def label_logits(features: Sequence[Tensor], P: Params, use_concat: bool, prefix: str = "head") -> Tensor:
    if not features:
        raise ValueError("label_scores: missing iteration features")
    if use_concat:
        expected = P[f"{prefix}.W3"].shape[0] // features[0].shape[1]
        if len(features) != expected:
            raise ValueError(f"label_scores: expected features from {expected} iterations, got {len(features)}")
        joined = T.concat(list(features), axis=1)
    else:
        joined = features[-1]
    hidden = T.tanh(joined @ P[f"{prefix}.W3"] + P[f"{prefix}.b3"])
    logits = hidden @ P[f"{prefix}.W4"] + P[f"{prefix}.b4"]
    return T.reshape(logits, (features[0].shape[0],))


def label_scores(features: Sequence[Tensor], P: Params, use_concat: bool, prefix: str = "head") -> Tensor:
    """y = sigmoid(W4 tanh(W3 [h^1; ...; h^K] + b3) + b4), one score per sentence."""
    return T.sigmoid(label_logits(features, P, use_concat, prefix))


def auxiliary_scores(features: Sequence[np.ndarray], P: Params, use_concat: bool, prefix: str = "head") -> np.ndarray:
    """Head applied to each iteration's features alone (other slots zero). Diagnostic only."""
    head = {name: Tensor(P[name].data) for name in (f"{prefix}.W3", f"{prefix}.b3", f"{prefix}.W4", f"{prefix}.b4")}
    rows = []
    for k, feature in enumerate(features):
        if use_concat:
            slots = [Tensor(feature if j == k else np.zeros_like(feature)) for j in range(len(features))]
        else:
            slots = [Tensor(feature)]
        rows.append(label_scores(slots, head, use_concat, prefix).data)
    return np.stack(rows)
