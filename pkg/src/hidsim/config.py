"""Run configuration: defaults, validation, and key=value file parsing."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .kdd import DEFAULT_FEATURES, RANKING_FEATURES

# Tuned once on the bundled demo corpus and frozen; the svm module keeps its
# own library defaults (C=10, sigma=1).
TUNED_C = 100.0
TUNED_SIGMA = 0.2


@dataclass
class ExperimentConfig:
    dataset: str | None = None
    category_map: str | None = None
    features: tuple = DEFAULT_FEATURES
    c_param: float = TUNED_C
    sigma: float = TUNED_SIGMA
    squared_norm: bool = True

    n_nodes: int = 45
    n_clusters: int = 3
    area: float = 10000.0
    comm_range: float = 50.0
    n_ids: object = "auto"  # "auto" -> round(1.6 r^2 d)

    train_normal: int = 50
    train_anom: int = 50
    seeds: tuple = (1, 2, 3, 4, 5)

    e_tx: float = 50e-6
    e_rx: float = 25e-6
    node_energy: float = 2.0
    head_energy: float = 10.0

    attack_fraction: float = 0.1
    attack_categories: tuple = ("dos", "probe")
    ticks: int = 25
    signature_samples: int = 80
    seed_signatures: bool = True

    max_passes: int = 20
    wire_feature_bytes: int = 4
    wire_label_bytes: int = 1
    wire_header_bytes: int = 8

    compare_n_values: tuple = (4, 8, 12, 16, 18)
    ranking_features: tuple = RANKING_FEATURES

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        for name in ("c_param", "sigma", "area", "comm_range", "node_energy",
                     "head_energy", "e_tx", "e_rx"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("n_nodes", "n_clusters", "train_normal", "train_anom",
                     "ticks", "max_passes", "signature_samples",
                     "wire_feature_bytes", "wire_label_bytes", "wire_header_bytes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.n_clusters > self.n_nodes:
            raise ConfigError("n_clusters cannot exceed n_nodes")
        if not (0.0 <= self.attack_fraction <= 1.0):
            raise ConfigError("attack_fraction must lie in [0, 1]")
        if self.head_energy <= self.node_energy:
            raise ConfigError("head_energy must exceed node_energy")
        if self.n_ids != "auto":
            try:
                self.n_ids = int(self.n_ids)
            except (TypeError, ValueError):
                raise ConfigError(f"n_ids must be an integer or 'auto', got {self.n_ids!r}") from None
            if self.n_ids < 1:
                raise ConfigError("n_ids must be at least 1")


_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}
_TUPLE_INT = ("seeds", "compare_n_values")
_TUPLE_STR = ("features", "attack_categories", "ranking_features")
_BOOLS = ("squared_norm", "seed_signatures")


def _coerce(name, value):
    if not isinstance(value, str):
        if name in _TUPLE_INT or name in _TUPLE_STR:
            return tuple(value)
        return value
    value = value.strip()
    if name in _TUPLE_INT:
        return tuple(int(v) for v in value.split(",") if v.strip())
    if name in _TUPLE_STR:
        return tuple(v.strip() for v in value.split(",") if v.strip())
    if name in _BOOLS:
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name} must be a boolean, got {value!r}")
    if name == "n_ids":
        return value if value == "auto" else int(value)
    if name in ("dataset", "category_map"):
        return value
    for caster in (int, float):
        try:
            return caster(value)
        except ValueError:
            continue
    raise ConfigError(f"cannot parse value {value!r} for {name}")


def config_from_mapping(mapping) -> ExperimentConfig:
    """Build a config from string-or-typed values; unknown keys fail."""
    kwargs = {}
    for key, value in mapping.items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            kwargs[key] = _coerce(key, value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    return ExperimentConfig(**kwargs)


def load_config_file(path) -> dict:
    """key=value lines; blank lines and #-comments ignored."""
    out = {}
    text = Path(path).read_text()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
