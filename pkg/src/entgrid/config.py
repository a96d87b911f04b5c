"""Training configuration and config-file parsing (JSON or key=value lines)."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError


@dataclass
class TrainConfig:
    """Hyperparameters of a training run.

    filter/pool lengths live in {1..12}; width 1 keeps transitions within a
    single path column.
    """

    batch_size: int = 32
    embedding_dim: int = 300
    num_filters: int = 150
    filter_length: int = 6
    pool_length: int = 6
    filter_width: int = 2
    pool_width: int = 2
    max_epochs: int = 25
    permutations_per_doc: int = 20
    seed: int = 0
    lexicalized: bool = True
    embeddings_path: str | None = None
    learning_rate: float = 0.001
    rho: float = 0.9
    epsilon: float = 1e-8
    batchnorm: bool = True
    dev_fraction: float = 0.1
    max_tokens: int | None = None
    max_paths: int | None = None

    def __post_init__(self):
        for name in ("batch_size", "embedding_dim", "num_filters", "max_epochs",
                     "permutations_per_doc"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        for name in ("filter_length", "pool_length", "filter_width", "pool_width"):
            if not 1 <= getattr(self, name) <= 12:
                raise ValidationError(f"{name} must be in 1..12")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ValidationError("dev_fraction must be in [0, 1)")
        if self.learning_rate <= 0 or not 0 <= self.rho < 1 or self.epsilon <= 0:
            raise ValidationError("invalid optimizer hyperparameters")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def load_train_config(path: str | Path | None, **overrides) -> TrainConfig:
    """Read a config file (JSON object or key=value lines) plus overrides."""
    values: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        stripped = text.lstrip()
        if stripped.startswith("{"):
            try:
                values = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: invalid JSON config: {exc.msg}") from None
            if not isinstance(values, dict):
                raise ValidationError(f"{path}: config must be a JSON object")
        else:
            for lineno, line in enumerate(text.splitlines(), start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValidationError(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                values[key.strip()] = _coerce(value.strip())
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - _FIELDS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return TrainConfig(**values)
