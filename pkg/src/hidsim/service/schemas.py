"""Request/response models for the experiment service.

Request fields default to None and fall through to the packaged
ExperimentConfig defaults, so there is exactly one source of truth for
parameter values.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import ExperimentConfig, config_from_mapping


class RunRequest(BaseModel):
    dataset: str
    category_map: str | None = None
    features: list[str] | None = None
    c_param: float | None = None
    sigma: float | None = None
    squared_norm: bool | None = None
    n_nodes: int | None = None
    n_clusters: int | None = None
    area: float | None = None
    comm_range: float | None = None
    n_ids: int | str | None = None
    train_normal: int | None = None
    train_anom: int | None = None
    seeds: list[int] | None = None
    e_tx: float | None = None
    e_rx: float | None = None
    node_energy: float | None = None
    head_energy: float | None = None
    attack_fraction: float | None = None
    attack_categories: list[str] | None = None
    ticks: int | None = None
    signature_samples: int | None = None
    seed_signatures: bool | None = None
    max_passes: int | None = None
    compare_n_values: list[int] | None = None
    ranking_features: list[str] | None = None

    def to_config(self) -> ExperimentConfig:
        mapping = {k: v for k, v in self.model_dump().items() if v is not None}
        return config_from_mapping(mapping)


class MetricsRowModel(BaseModel):
    seed: int
    n_ids: int
    accuracy: float
    detection_rate: float | None
    false_positive_rate: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    bytes_distributed: int
    bytes_centralized: int
    comm_ratio: float
    signatures_learned: int
    nodes_isolated: int
    reelections: int


class CompareRowModel(BaseModel):
    seed: int
    n_ids: int
    mode: str
    accuracy: float
    detection_rate: float | None
    false_positive_rate: float | None


class RankingRowModel(BaseModel):
    feature_ids: list[str]
    accuracy: float
    detection_rate: float


class ExperimentResponse(BaseModel):
    rows: list[MetricsRowModel]
    files: dict[str, str] = Field(
        description="CSV artifacts keyed by output filename"
    )


class CompareResponse(BaseModel):
    rows: list[CompareRowModel]
    files: dict[str, str]


class RankingResponse(BaseModel):
    rows: list[RankingRowModel]
    files: dict[str, str]


class PredictionPair(BaseModel):
    true_label: int
    predicted_label: int


class MetricsRequest(BaseModel):
    pairs: list[PredictionPair]


class MetricsResponse(BaseModel):
    accuracy: float
    detection_rate: float | None
    false_positive_rate: float | None
    tp: int
    fp: int
    tn: int
    fn: int


class CorpusInfoRequest(BaseModel):
    dataset: str
    category_map: str | None = None


class CorpusInfoResponse(BaseModel):
    records: int
    categories: dict[str, int]
    cached: bool


class ErrorBody(BaseModel):
    kind: str  # "config" | "data" | "protocol"
    detail: str
