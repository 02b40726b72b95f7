"""Model, training and runtime configuration."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

# Project root is the parent directory of this file's parent (src/)
_PROJECT_ROOT = str(Path(__file__).parent.parent.resolve())


class ConfigError(ValueError):
    """Invalid configuration value or key."""


class Ablation(str, enum.Enum):
    """Model variants with one mechanism removed."""

    FULL = "full"
    NO_SELECTIVE = "no_selective"
    NO_ITERATION = "no_iteration"
    NO_CONCAT = "no_concat"


@dataclass(frozen=True)
class ItsConfig:
    """Shape and switches of the iterative network.

    Attributes:
        iterations: number of polishing iterations K
        hidden: GRU state width
        embedding: word embedding width
        gate_hidden: selective gate MLP width (0 means "same as hidden")
        label_hidden: labeling MLP width (0 means "same as hidden")
        max_words: sentence length after padding or cutting
        keep_prob: dropout keep probability (train mode only)
    """

    iterations: int = 5
    hidden: int = 200
    embedding: int = 100
    gate_hidden: int = 0
    label_hidden: int = 0
    max_words: int = 70
    keep_prob: float = 0.7
    use_selective_reading: bool = True
    use_concat_labeling: bool = True
    tie_iteration_params: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        for name in ("hidden", "embedding", "max_words"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("gate_hidden", "label_hidden"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ConfigError(f"keep_prob must be in (0, 1], got {self.keep_prob}")

    @property
    def gate_width(self) -> int:
        return self.gate_hidden or self.hidden

    @property
    def label_width(self) -> int:
        return self.label_hidden or self.hidden

    @property
    def iteration_blocks(self) -> int:
        return 1 if self.tie_iteration_params else self.iterations

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> ItsConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown model config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings.

    The learning rate is annealed by ``anneal_factor`` every ``anneal_period``
    epochs. ``l2`` applies to every non-bias parameter.
    """

    learning_rate: float = 0.001
    anneal_factor: float = 0.5
    anneal_period: int = 6
    epochs: int = 30
    batch_size: int = 64
    l2: float = 1e-5
    keep_prob: float = 0.7
    max_select: int = 3
    seed: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    shuffle: bool = True
    recompute_labels: bool = False

    def __post_init__(self):
        for name in ("learning_rate", "anneal_factor", "epsilon"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("anneal_period", "epochs", "batch_size", "max_select"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.l2 < 0:
            raise ConfigError(f"l2 must be >= 0, got {self.l2}")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ConfigError(f"keep_prob must be in (0, 1], got {self.keep_prob}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _default_data_dir() -> str:
    """Get default data directory (project root)."""
    return _PROJECT_ROOT


@dataclass
class RuntimeSettings:
    """Process-wide settings.

    Attributes:
        log_level: logging level name (ITS_LOG_LEVEL)
        workers: threads used for per-document gradients and evaluation (ITS_WORKERS)
        data_dir: default directory for outputs (ITS_DATA_DIR)
    """

    log_level: str = "INFO"
    workers: int = 1
    data_dir: str = field(default_factory=_default_data_dir)

    @property
    def runs_dir(self) -> str:
        """Default output directory for CLI runs."""
        return str(Path(self.data_dir) / "runs")


# Global settings instance
_settings: RuntimeSettings | None = None


# ##################################################################
# get global settings instance
# creates default settings if none exist, reading from environment variables
def get_settings() -> RuntimeSettings:
    global _settings
    if _settings is None:
        try:
            workers = max(1, int(os.environ.get("ITS_WORKERS", "1")))
        except ValueError:
            raise ConfigError(f"ITS_WORKERS must be an integer, got {os.environ['ITS_WORKERS']!r}") from None
        _settings = RuntimeSettings(
            log_level=os.environ.get("ITS_LOG_LEVEL", "INFO").upper(),
            workers=workers,
            data_dir=os.environ.get("ITS_DATA_DIR", _PROJECT_ROOT),
        )
    return _settings


# ##################################################################
# set global settings instance
# replaces the current settings with new ones
def set_settings(settings: RuntimeSettings | None) -> None:
    global _settings
    _settings = settings


# ##################################################################
# key=value config files
# "model.hidden=16" style lines, "#" comments, blank lines ignored
def load_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[key] = value
    return values


def parse_assignments(items: list[str]) -> dict[str, str]:
    """Parse repeated ``--set section.key=value`` flags."""
    values = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"Override must look like section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _coerce(kind: type, key: str, raw: str):
    if kind is bool:
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from None


def _field_types(cls) -> dict[str, type]:
    types = {"int": int, "float": float, "bool": bool, "str": str}
    return {f.name: types[f.type] for f in fields(cls)}


def apply_overrides(its: ItsConfig, train: TrainConfig, values: dict[str, str]) -> tuple[ItsConfig, TrainConfig]:
    """Apply "model.*" and "train.*" string values onto the two configs."""
    sections = {"model": (its, _field_types(ItsConfig)), "train": (train, _field_types(TrainConfig))}
    changes: dict[str, dict] = {"model": {}, "train": {}}
    for key, raw in values.items():
        section, _, name = key.partition(".")
        if section not in sections or name not in sections[section][1]:
            raise ConfigError(f"Unknown config key: {key}")
        if key == "model.keep_prob":
            raise ConfigError("model.keep_prob is taken from train.keep_prob; set that instead")
        changes[section][name] = _coerce(sections[section][1][name], key, raw)
    return replace(its, **changes["model"]), replace(train, **changes["train"])


def apply_ablation(its: ItsConfig, ablation: Ablation | str) -> ItsConfig:
    ablation = Ablation(ablation)
    if ablation is Ablation.NO_SELECTIVE:
        return replace(its, use_selective_reading=False)
    if ablation is Ablation.NO_ITERATION:
        return replace(its, iterations=1)
    if ablation is Ablation.NO_CONCAT:
        return replace(its, use_concat_labeling=False)
    return its
