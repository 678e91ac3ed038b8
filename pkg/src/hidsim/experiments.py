"""Experiment runners and metric/CSV emission.

Four scenarios: train-eval (distributed training plus test-set metrics),
compare (distributed vs centralized accuracy over an IDS-count sweep),
simulate (full traffic lifecycle) and rank-features (delete-one ranking).
All outputs are plain CSV and depend only on (config, corpus, seeds).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .errors import DataError
from .kdd import (
    FeatureRanking,
    LabeledDataset,
    load_category_map,
    parse_kdd,
    rank_features,
    select_features,
)
from .simulate import Simulator
from .svm import KernelParams, train


@dataclass
class Metrics:
    accuracy: float
    detection_rate: float | None
    false_positive_rate: float | None
    tp: int
    fp: int
    tn: int
    fn: int


def compute_metrics(pairs) -> Metrics:
    """Confusion metrics over (true, predicted) label pairs; anomalous (-1)
    counts as the positive class. Rates are percentages; a rate with an
    empty denominator is None."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cannot compute metrics over zero predictions")
    tp = sum(1 for t, p in pairs if t == -1 and p == -1)
    fn = sum(1 for t, p in pairs if t == -1 and p == 1)
    fp = sum(1 for t, p in pairs if t == 1 and p == -1)
    tn = sum(1 for t, p in pairs if t == 1 and p == 1)
    total = tp + fn + fp + tn
    accuracy = (tp + tn) / total * 100.0
    detection = tp / (tp + fn) * 100.0 if (tp + fn) else None
    false_pos = fp / (fp + tn) * 100.0 if (fp + tn) else None
    return Metrics(accuracy, detection, false_pos, tp, fp, tn, fn)


@dataclass
class MetricsRow:
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


def _fmt(value) -> str:
    if value is None:
        return ""
    return str(value)


METRICS_HEADER = (
    "seed,n_ids,accuracy,detection_rate,false_positive_rate,tp,fp,tn,fn,"
    "bytes_distributed,bytes_centralized,comm_ratio,"
    "signatures_learned,nodes_isolated,reelections"
)


def metrics_csv(rows: list[MetricsRow]) -> str:
    lines = [METRICS_HEADER]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (
            r.seed, r.n_ids, r.accuracy, r.detection_rate, r.false_positive_rate,
            r.tp, r.fp, r.tn, r.fn, r.bytes_distributed, r.bytes_centralized,
            r.comm_ratio, r.signatures_learned, r.nodes_isolated, r.reelections,
        )))
    return "\n".join(lines) + "\n"


def load_corpus(cfg: ExperimentConfig):
    """Parse the configured corpus file into raw records."""
    if not cfg.dataset:
        raise DataError("no dataset configured")
    return parse_kdd(cfg.dataset)


def dataset_from_records(records, cfg: ExperimentConfig,
                         features=None) -> LabeledDataset:
    """Project parsed records onto the configured features (unnormalized;
    runners scale with training statistics)."""
    cmap = load_category_map(cfg.category_map)
    return select_features(records, cmap, features or cfg.features)


def _row_from_simulator(sim: Simulator, metrics: Metrics) -> MetricsRow:
    comm = sim.communication()
    return MetricsRow(
        seed=sim.seed,
        n_ids=sim.n_ids,
        accuracy=metrics.accuracy,
        detection_rate=metrics.detection_rate,
        false_positive_rate=metrics.false_positive_rate,
        tp=metrics.tp, fp=metrics.fp, tn=metrics.tn, fn=metrics.fn,
        bytes_distributed=comm.distributed_bytes,
        bytes_centralized=comm.centralized_bytes,
        comm_ratio=comm.ratio,
        signatures_learned=sim.signatures_learned(),
        nodes_isolated=len(sim.isolation_order),
        reelections=sim.reelections,
    )


@dataclass
class TrainEvalResult:
    rows: list[MetricsRow]
    simulators: list[Simulator]

    def files(self) -> dict[str, str]:
        return {"metrics.csv": metrics_csv(self.rows)}


def run_train_eval(cfg: ExperimentConfig, records) -> TrainEvalResult:
    ds = dataset_from_records(records, cfg)
    rows, sims = [], []
    for seed in cfg.seeds:
        sim = Simulator(cfg, ds, seed).setup().train()
        pairs = sim.evaluate_test_set()
        rows.append(_row_from_simulator(sim, compute_metrics(pairs)))
        sims.append(sim)
    return TrainEvalResult(rows, sims)


@dataclass
class CompareRow:
    seed: int
    n_ids: int
    mode: str  # "distributed" | "centralized"
    accuracy: float
    detection_rate: float | None
    false_positive_rate: float | None


COMPARISON_HEADER = "seed,n_ids,mode,accuracy,detection_rate,false_positive_rate"


def comparison_csv(rows: list[CompareRow]) -> str:
    lines = [COMPARISON_HEADER]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (
            r.seed, r.n_ids, r.mode, r.accuracy, r.detection_rate,
            r.false_positive_rate,
        )))
    return "\n".join(lines) + "\n"


def run_compare(cfg: ExperimentConfig, records,
                n_values=None) -> list[CompareRow]:
    """Distributed and centralized paths trained on identical corpora and
    evaluated on identical test sets per (seed, N)."""
    from dataclasses import replace

    ds = dataset_from_records(records, cfg)
    n_values = tuple(n_values or cfg.compare_n_values)
    rows = []
    for n in n_values:
        for seed in cfg.seeds:
            sub = replace(cfg, n_ids=int(n))
            sim = Simulator(sub, ds, seed).setup().train()
            pairs = sim.evaluate_test_set()
            m = compute_metrics(pairs)
            rows.append(CompareRow(seed, sim.n_ids, "distributed", m.accuracy,
                                   m.detection_rate, m.false_positive_rate))

            pooled = sorted(sim.pooled_training, key=lambda s: s.uid)
            model = train(pooled, c_param=cfg.c_param,
                          kernel=KernelParams(cfg.sigma, cfg.squared_norm))
            xs = np.array([s.x for s in sim.test_samples])
            preds = np.where(model.decision_values(xs) >= 0, 1, -1)
            cm = compute_metrics([(s.y, int(p)) for s, p in zip(sim.test_samples, preds)])
            rows.append(CompareRow(seed, sim.n_ids, "centralized", cm.accuracy,
                                   cm.detection_rate, cm.false_positive_rate))
    return rows


@dataclass
class SimulateResult:
    rows: list[MetricsRow]
    simulators: list[Simulator]

    def files(self) -> dict[str, str]:
        from .network import charges_csv, nodes_csv

        out = {"metrics.csv": metrics_csv(self.rows)}
        for i, sim in enumerate(self.simulators):
            # first seed gets the canonical names, the rest are suffixed
            suffix = "" if i == 0 else f"-seed{sim.seed}"
            out[f"events{suffix}.csv"] = sim.events_csv()
            out[f"energy{suffix}.csv"] = nodes_csv(sim.topo, sim.ledger)
            out[f"charges{suffix}.csv"] = charges_csv(sim.ledger)
        return out


def run_simulate(cfg: ExperimentConfig, records) -> SimulateResult:
    ds = dataset_from_records(records, cfg)
    rows, sims = [], []
    for seed in cfg.seeds:
        sim = Simulator(cfg, ds, seed).setup().train().replay()
        if sim.traffic_outcomes:
            metrics = compute_metrics(sim.traffic_outcomes)
        else:
            metrics = Metrics(100.0, None, None, 0, 0, 0, 0)
        rows.append(_row_from_simulator(sim, metrics))
        sims.append(sim)
    return SimulateResult(rows, sims)


RANKING_HEADER = "n_features,features,accuracy,detection_rate"


def ranking_csv(ranking: FeatureRanking) -> str:
    lines = [RANKING_HEADER]
    for row in ranking.rows:
        feats = "|".join(row.feature_ids)
        lines.append(f"{len(row.feature_ids)},{feats},{row.accuracy},{row.detection_rate}")
    return "\n".join(lines) + "\n"


def run_rank_features(cfg: ExperimentConfig, records) -> FeatureRanking:
    """Delete-one ranking driven by the distributed train/eval pipeline,
    evaluated with the first configured seed."""
    base_ds = dataset_from_records(records, cfg, features=cfg.ranking_features)
    seed = cfg.seeds[0]

    def evaluate(sub_ds: LabeledDataset):
        sim = Simulator(cfg, sub_ds, seed).setup().train()
        m = compute_metrics(sim.evaluate_test_set())
        return m.accuracy, m.detection_rate

    return rank_features(base_ds, cfg.ranking_features, evaluate)
