"""Command-line client for the experiment service.

Every experiment subcommand builds a request from an optional key=value
config file plus flags (flags win), posts it to the service and writes the
returned CSV artifacts into --out. By default the service runs in-process
over an ASGI transport, so no server is needed; point --server at a
running `hidsim serve` instance to reuse its corpus cache across calls.

Exit codes: 0 success, 1 configuration error, 2 data error,
3 protocol/solver error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .config import load_config_file
from .errors import ConfigError

EXIT_BY_KIND = {"config": 1, "data": 2, "protocol": 3}


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # no server: bridge straight into an in-process application
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _fail(kind: str, message: str):
    click.echo(f"error ({kind}): {message}", err=True)
    sys.exit(EXIT_BY_KIND.get(kind, 1))


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    try:
        response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        _fail("config", f"cannot reach service: {exc}")
    if response.status_code == 400:
        body = response.json()
        _fail(body.get("kind", "protocol"), body.get("detail", "unknown error"))
    if response.status_code == 422:
        _fail("config", json.dumps(response.json().get("detail")))
    if response.status_code != 200:
        _fail("protocol", f"service returned {response.status_code}: {response.text}")
    return response.json()


def _build_payload(dataset, category_map, config, seed, n_ids, extra=None) -> dict:
    payload = {}
    if config:
        payload.update(load_config_file(config))
    if dataset:
        payload["dataset"] = dataset
    if category_map:
        payload["category_map"] = category_map
    if seed:
        payload["seeds"] = [int(s) for s in seed.split(",") if s.strip()]
    if n_ids:
        payload["n_ids"] = n_ids if n_ids == "auto" else int(n_ids)
    if extra:
        payload.update(extra)
    if "dataset" not in payload:
        raise ConfigError("no dataset given; pass --dataset PATH")
    # config files carry raw strings; the service expects typed JSON
    for key, value in list(payload.items()):
        if isinstance(value, str) and key not in ("dataset", "category_map", "n_ids"):
            payload[key] = _parse_value(key, value)
    return payload


def _parse_value(key, value):
    if "," in value or key in ("seeds", "features", "attack_categories",
                               "compare_n_values", "ranking_features"):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        try:
            return [int(p) for p in parts]
        except ValueError:
            return parts
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for caster in (int, float):
        try:
            return caster(value)
        except ValueError:
            continue
    return value


def _write_files(files: dict, out: str):
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text)
        click.echo(f"wrote {out_dir / name}")


def common_options(fn):
    fn = click.option("--dataset", type=str, default=None,
                      help="KDD-format corpus (plain or gzip)")(fn)
    fn = click.option("--category-map", type=str, default=None,
                      help="attack-name/category table overriding the packaged one")(fn)
    fn = click.option("--config", type=click.Path(exists=True), default=None,
                      help="key=value config file; flags override it")(fn)
    fn = click.option("--seed", type=str, default=None,
                      help="comma-separated seed list")(fn)
    fn = click.option("--n-ids", type=str, default=None,
                      help="IDS budget, an integer or 'auto'")(fn)
    fn = click.option("--out", type=str, default="out",
                      help="directory for CSV outputs")(fn)
    fn = click.option("--server", type=str, default=None,
                      help="base URL of a running service; in-process when omitted")(fn)
    return fn


@click.group()
def main():
    """Distributed hybrid intrusion detection experiments."""


def _run(endpoint, dataset, category_map, config, seed, n_ids, out, server,
         extra=None, summarize=None):
    try:
        payload = _build_payload(dataset, category_map, config, seed, n_ids, extra)
    except ConfigError as exc:
        _fail("config", str(exc))
    with _client(server) as client:
        body = _post(client, endpoint, payload)
    _write_files(body["files"], out)
    if summarize:
        summarize(body["rows"])
    return body


def _metric_summary(rows):
    for row in rows:
        det = row["detection_rate"]
        fpr = row["false_positive_rate"]
        click.echo(
            f"seed={row['seed']} N={row['n_ids']} "
            f"accuracy={row['accuracy']:.2f}% "
            f"detection={'n/a' if det is None else f'{det:.2f}%'} "
            f"false-positive={'n/a' if fpr is None else f'{fpr:.2f}%'} "
            f"comm-ratio={row['comm_ratio']:.3f}"
        )


@main.command("train-eval")
@common_options
def train_eval(dataset, category_map, config, seed, n_ids, out, server):
    """Distributed training to consensus plus test-set metrics."""
    _run("/experiments/train-eval", dataset, category_map, config, seed,
         n_ids, out, server, summarize=_metric_summary)


@main.command("compare")
@common_options
@click.option("--n-values", type=str, default=None,
              help="comma-separated IDS counts to sweep")
def compare(dataset, category_map, config, seed, n_ids, out, server, n_values):
    """Distributed vs centralized accuracy across an IDS-count sweep."""
    extra = {}
    if n_values:
        extra["compare_n_values"] = [int(v) for v in n_values.split(",")]
    body = _run("/experiments/compare", dataset, category_map, config, seed,
                n_ids, out, server, extra=extra)
    for row in body["rows"]:
        click.echo(f"N={row['n_ids']} seed={row['seed']} {row['mode']}: "
                   f"{row['accuracy']:.2f}%")


@main.command("simulate")
@common_options
@click.option("--attack-fraction", type=float, default=None,
              help="fraction of nodes emitting attack traffic")
@click.option("--ticks", type=int, default=None, help="traffic replay length")
def simulate(dataset, category_map, config, seed, n_ids, out, server,
             attack_fraction, ticks):
    """Full lifecycle: train, replay traffic, detect, rotate agents."""
    extra = {}
    if attack_fraction is not None:
        extra["attack_fraction"] = attack_fraction
    if ticks is not None:
        extra["ticks"] = ticks
    body = _run("/experiments/simulate", dataset, category_map, config, seed,
                n_ids, out, server, extra=extra, summarize=_metric_summary)
    for row in body["rows"]:
        click.echo(f"seed={row['seed']}: isolated={row['nodes_isolated']} "
                   f"signatures={row['signatures_learned']} "
                   f"reelections={row['reelections']}")


@main.command("rank-features")
@common_options
@click.option("--features", type=str, default=None,
              help="comma-separated candidate features to rank")
def rank_features(dataset, category_map, config, seed, n_ids, out, server,
                  features):
    """Delete-one feature ranking driven by distributed train/eval."""
    extra = {}
    if features:
        extra["ranking_features"] = [f.strip() for f in features.split(",")]
    body = _run("/experiments/rank-features", dataset, category_map, config,
                seed, n_ids, out, server, extra=extra)
    for row in body["rows"]:
        click.echo(f"{len(row['feature_ids'])} features: "
                   f"accuracy={row['accuracy']:.2f}% "
                   f"detection={row['detection_rate']:.2f}%")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
def serve(host, port):
    """Run the experiment service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command("demo-data")
@click.option("--out", type=str, default="demo_kdd.csv", show_default=True)
@click.option("--seed", type=int, default=8, show_default=True)
@click.option("--records", type=int, default=None,
              help="approximate corpus size; scales all classes")
def demo_data(out, seed, records):
    """Write a synthetic KDD-format corpus for trying the pipeline."""
    from .synthetic import write_corpus

    kwargs = {}
    if records:
        scale = records / 5260
        kwargs = dict(
            n_normal=max(200, int(2600 * scale)),
            n_dos=max(120, int(1500 * scale)),
            n_probe=max(120, int(1100 * scale)),
            n_excluded=max(10, int(60 * scale)),
        )
    path = write_corpus(out, seed=seed, **kwargs)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
