"""Named parameter arrays of the iterative network.

Weights use the row-vector convention ``x @ W`` so a matrix is stored as
(input width, output width). Names are dotted paths such as
``context.fwd.w_u`` or ``iter2.gate.W1``; a name whose last component starts
with "b" is a bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.config import ItsConfig
from src.tensor import RngState, Tape, Tensor
from src.vocabulary import PAD_ID, EmbeddingMatrix

WEIGHT_INIT_RANGE = 0.1
EMBEDDING_INIT_RANGE = 0.2

GRU_GATES = ("u", "r", "h")


def block_prefix(config: ItsConfig, iteration: int) -> str:
    """Parameter prefix for 1-based ``iteration``; tied configs share block 1."""
    return "iter1" if config.tie_iteration_params else f"iter{iteration}"


def is_bias(name: str) -> bool:
    return name.rsplit(".", 1)[-1].startswith("b")


def _gru_shapes(prefix: str, input_width: int, hidden: int, with_update: bool = True) -> dict[str, tuple[int, ...]]:
    shapes = {}
    for gate in GRU_GATES:
        if gate == "u" and not with_update:
            continue
        shapes[f"{prefix}.w_{gate}"] = (input_width, hidden)
        shapes[f"{prefix}.u_{gate}"] = (hidden, hidden)
        shapes[f"{prefix}.b_{gate}"] = (hidden,)
    return shapes


def parameter_shapes(config: ItsConfig, vocab_size: int) -> dict[str, tuple[int, ...]]:
    """Every parameter name with its shape, in a fixed order."""
    n_h, n_e = config.hidden, config.embedding
    shapes: dict[str, tuple[int, ...]] = {"embedding": (vocab_size, n_e)}
    shapes.update(_gru_shapes("context.fwd", n_e, n_h))
    shapes.update(_gru_shapes("context.bwd", n_e, n_h))
    shapes["doc_init.W"] = (2 * n_h, n_h)
    shapes["doc_init.b"] = (n_h,)
    for block in range(1, config.iteration_blocks + 1):
        prefix = f"iter{block}"
        # the selective gate replaces the update gate
        for direction in ("fwd", "bwd"):
            shapes.update(
                _gru_shapes(f"{prefix}.select.{direction}", n_h, n_h, with_update=not config.use_selective_reading)
            )
        if config.use_selective_reading:
            shapes[f"{prefix}.gate.W1"] = (3 * n_h, config.gate_width)
            shapes[f"{prefix}.gate.b1"] = (config.gate_width,)
            shapes[f"{prefix}.gate.W2"] = (config.gate_width, n_h)
            shapes[f"{prefix}.gate.b2"] = (n_h,)
        shapes.update(_gru_shapes(f"{prefix}.unit", n_h, n_h))
        shapes.update(_gru_shapes(f"{prefix}.decoder.fwd", n_h, n_h))
        shapes.update(_gru_shapes(f"{prefix}.decoder.bwd", n_h, n_h))
    head_width = config.iterations * n_h if config.use_concat_labeling else n_h
    shapes["head.W3"] = (head_width, config.label_width)
    shapes["head.b3"] = (config.label_width,)
    shapes["head.W4"] = (config.label_width, 1)
    shapes["head.b4"] = (1,)
    return shapes


def parameter_count(config: ItsConfig, vocab_size: int) -> int:
    """Closed-form number of scalars."""
    n_h, n_e, n_f, n_m = config.hidden, config.embedding, config.gate_width, config.label_width

    def gru(input_width: int, gates: int = 3) -> int:
        return gates * (input_width * n_h + n_h * n_h + n_h)

    select_gates = 2 if config.use_selective_reading else 3
    gate = (3 * n_h * n_f + n_f + n_f * n_h + n_h) if config.use_selective_reading else 0
    block = 2 * gru(n_h, select_gates) + gate + gru(n_h) + 2 * gru(n_h)
    head_width = config.iterations * n_h if config.use_concat_labeling else n_h
    head = head_width * n_m + n_m + n_m + 1
    return vocab_size * n_e + 2 * gru(n_e) + (2 * n_h * n_h + n_h) + config.iteration_blocks * block + head


@dataclass
class ItsParameters:
    """The authoritative parameter set: config, vocabulary size and named arrays."""

    config: ItsConfig
    vocab_size: int
    arrays: dict[str, np.ndarray]

    def __post_init__(self):
        expected = parameter_shapes(self.config, self.vocab_size)
        missing = [name for name in expected if name not in self.arrays]
        extra = [name for name in self.arrays if name not in expected]
        if missing or extra:
            raise ValueError(f"Parameter set mismatch: missing {missing}, unexpected {extra}")
        for name, shape in expected.items():
            if tuple(self.arrays[name].shape) != shape:
                raise ValueError(f"Parameter '{name}' has shape {self.arrays[name].shape}, expected {shape}")

    def names(self) -> list[str]:
        return list(self.arrays)

    def regularized_names(self) -> list[str]:
        return [name for name in self.arrays if not is_bias(name)]

    def count(self) -> int:
        return sum(int(a.size) for a in self.arrays.values())

    def copy(self) -> ItsParameters:
        return ItsParameters(self.config, self.vocab_size, {k: v.copy() for k, v in self.arrays.items()})

    def as_tensors(self, tape: Tape | None = None) -> dict[str, Tensor]:
        """Taped leaves when a tape is given, otherwise constants."""
        if tape is None:
            return {name: Tensor(value) for name, value in self.arrays.items()}
        return {name: tape.leaf(value, name=name) for name, value in self.arrays.items()}


def init_parameters(
    config: ItsConfig,
    vocab_size: int,
    rng: RngState,
    embeddings: EmbeddingMatrix | None = None,
) -> ItsParameters:
    """Uniform[-0.1, 0.1] weights, zero biases, embedding rows from ``embeddings``
    or uniform[-0.2, 0.2] with a zero PAD row."""
    gen = rng.generator()
    arrays: dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(config, vocab_size).items():
        if name == "embedding":
            if embeddings is not None:
                if embeddings.rows.shape != shape:
                    raise ValueError(f"Embedding matrix has shape {embeddings.rows.shape}, expected {shape}")
                value = np.array(embeddings.rows, dtype=np.float64)
            else:
                value = gen.uniform(-EMBEDDING_INIT_RANGE, EMBEDDING_INIT_RANGE, size=shape)
            value[PAD_ID] = 0.0
        elif is_bias(name):
            value = np.zeros(shape)
        else:
            value = gen.uniform(-WEIGHT_INIT_RANGE, WEIGHT_INIT_RANGE, size=shape)
        arrays[name] = value
    return ItsParameters(config, vocab_size, arrays)
