"""FastAPI application wrapping the experiment runners.

The service keeps parsed corpora resident (keyed by path and mtime), so a
sweep of many runs over one corpus pays the parse cost once. All endpoints
are synchronous compute calls; errors surface as a structured body with a
`kind` the CLI maps onto exit codes.
"""

from __future__ import annotations

import dataclasses
import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, DataError, HidsimError
from ..experiments import (
    compute_metrics,
    comparison_csv,
    ranking_csv,
    run_compare,
    run_rank_features,
    run_simulate,
    run_train_eval,
)
from ..kdd import load_category_map, parse_kdd, record_category
from . import schemas


def _error_kind(exc: HidsimError) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, DataError):
        return "data"
    return "protocol"


def _corpus(app: FastAPI, path: str):
    """Parsed records for `path`, cached against mtime and size."""
    try:
        stat = os.stat(path)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path!r}: {exc}") from None
    key = os.path.abspath(path)
    stamp = (stat.st_mtime_ns, stat.st_size)
    cached = app.state.corpus_cache.get(key)
    if cached and cached[0] == stamp:
        return cached[1], True
    records = parse_kdd(path)
    app.state.corpus_cache[key] = (stamp, records)
    return records, False


def _metrics_rows(rows):
    return [schemas.MetricsRowModel(**dataclasses.asdict(r)) for r in rows]


def create_app() -> FastAPI:
    app = FastAPI(title="hidsim", version=__version__)
    app.state.corpus_cache = {}

    @app.exception_handler(HidsimError)
    async def _hidsim_error(request: Request, exc: HidsimError):
        body = schemas.ErrorBody(kind=_error_kind(exc), detail=str(exc))
        return JSONResponse(status_code=400, content=body.model_dump())

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        body = schemas.ErrorBody(kind="config", detail=str(exc))
        return JSONResponse(status_code=400, content=body.model_dump())

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__,
                "cached_corpora": len(app.state.corpus_cache)}

    @app.post("/experiments/train-eval", response_model=schemas.ExperimentResponse)
    def train_eval(req: schemas.RunRequest):
        cfg = req.to_config()
        records, _ = _corpus(app, req.dataset)
        result = run_train_eval(cfg, records)
        return schemas.ExperimentResponse(rows=_metrics_rows(result.rows),
                                          files=result.files())

    @app.post("/experiments/compare", response_model=schemas.CompareResponse)
    def compare(req: schemas.RunRequest):
        cfg = req.to_config()
        records, _ = _corpus(app, req.dataset)
        rows = run_compare(cfg, records)
        models = [schemas.CompareRowModel(**dataclasses.asdict(r)) for r in rows]
        return schemas.CompareResponse(rows=models,
                                       files={"comparison.csv": comparison_csv(rows)})

    @app.post("/experiments/simulate", response_model=schemas.ExperimentResponse)
    def simulate(req: schemas.RunRequest):
        cfg = req.to_config()
        records, _ = _corpus(app, req.dataset)
        result = run_simulate(cfg, records)
        return schemas.ExperimentResponse(rows=_metrics_rows(result.rows),
                                          files=result.files())

    @app.post("/experiments/rank-features", response_model=schemas.RankingResponse)
    def rank_features(req: schemas.RunRequest):
        cfg = req.to_config()
        records, _ = _corpus(app, req.dataset)
        ranking = run_rank_features(cfg, records)
        models = [
            schemas.RankingRowModel(feature_ids=list(r.feature_ids),
                                    accuracy=r.accuracy,
                                    detection_rate=r.detection_rate)
            for r in ranking.rows
        ]
        return schemas.RankingResponse(rows=models,
                                       files={"ranking.csv": ranking_csv(ranking)})

    @app.post("/metrics", response_model=schemas.MetricsResponse)
    def metrics(req: schemas.MetricsRequest):
        pairs = [(p.true_label, p.predicted_label) for p in req.pairs]
        m = compute_metrics(pairs)
        return schemas.MetricsResponse(**dataclasses.asdict(m))

    @app.post("/corpus/info", response_model=schemas.CorpusInfoResponse)
    def corpus_info(req: schemas.CorpusInfoRequest):
        records, cached = _corpus(app, req.dataset)
        cmap = load_category_map(req.category_map)
        counts = {}
        for rec in records:
            cat = record_category(rec, cmap)
            counts[cat] = counts.get(cat, 0) + 1
        return schemas.CorpusInfoResponse(records=len(records),
                                          categories=counts, cached=cached)

    return app
