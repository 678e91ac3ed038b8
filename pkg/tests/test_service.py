import pytest
from starlette.testclient import TestClient

from hidsim.service import create_app


@pytest.fixture(scope="module")
def client(corpus_path):
    app = create_app()
    with TestClient(app, raise_server_exceptions=False) as tc:
        tc.corpus_path = str(corpus_path)
        yield tc


def small_request(client, **overrides):
    body = {
        "dataset": client.corpus_path,
        "seeds": [1],
        "n_nodes": 24,
        "n_clusters": 2,
        "n_ids": 6,
        "ticks": 6,
    }
    body.update(overrides)
    return body


class TestHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"


class TestTrainEval:
    def test_returns_rows_and_files(self, client):
        resp = client.post("/experiments/train-eval", json=small_request(client))
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["rows"]) == 1
        row = body["rows"][0]
        assert row["seed"] == 1 and row["n_ids"] == 6
        assert 0 <= row["accuracy"] <= 100
        assert row["comm_ratio"] < 1
        assert "metrics.csv" in body["files"]

    def test_corpus_cache_reused(self, client):
        client.post("/experiments/train-eval", json=small_request(client))
        info = client.post("/corpus/info", json={"dataset": client.corpus_path})
        assert info.json()["cached"] is True

    def test_responses_deterministic(self, client):
        a = client.post("/experiments/train-eval", json=small_request(client)).json()
        b = client.post("/experiments/train-eval", json=small_request(client)).json()
        assert a == b


class TestCompare:
    def test_paired_modes(self, client):
        req = small_request(client, compare_n_values=[2, 4])
        resp = client.post("/experiments/compare", json=req)
        assert resp.status_code == 200
        body = resp.json()
        modes = {r["mode"] for r in body["rows"]}
        assert modes == {"distributed", "centralized"}
        assert "comparison.csv" in body["files"]


class TestSimulate:
    def test_lifecycle(self, client):
        resp = client.post("/experiments/simulate", json=small_request(client))
        assert resp.status_code == 200
        body = resp.json()
        assert body["rows"][0]["nodes_isolated"] >= 1
        assert "events.csv" in body["files"]
        assert "energy.csv" in body["files"]


class TestRankFeatures:
    def test_rows_down_to_two(self, client):
        req = small_request(client, n_ids=2, n_nodes=16,
                            ranking_features=["src_bytes", "count", "serror_rate"])
        resp = client.post("/experiments/rank-features", json=req)
        assert resp.status_code == 200
        sizes = [len(r["feature_ids"]) for r in resp.json()["rows"]]
        assert sizes == [3, 2]


class TestMetricsEndpoint:
    def test_compute(self, client):
        pairs = [{"true_label": -1, "predicted_label": -1},
                 {"true_label": 1, "predicted_label": -1},
                 {"true_label": 1, "predicted_label": 1}]
        body = client.post("/metrics", json={"pairs": pairs}).json()
        assert body["tp"] == 1 and body["fp"] == 1 and body["tn"] == 1
        assert body["accuracy"] == pytest.approx(66.66666666666667)

    def test_empty_pairs_is_config_error(self, client):
        resp = client.post("/metrics", json={"pairs": []})
        assert resp.status_code == 400
        assert resp.json()["kind"] == "config"


class TestCorpusInfo:
    def test_counts(self, client):
        body = client.post("/corpus/info",
                           json={"dataset": client.corpus_path}).json()
        assert body["records"] == 5260
        assert set(body["categories"]) >= {"normal", "dos", "probe"}


class TestErrors:
    def test_missing_dataset_file_is_data_error(self, client):
        req = small_request(client, dataset="/nonexistent/corpus.csv")
        resp = client.post("/experiments/train-eval", json=req)
        assert resp.status_code == 400
        assert resp.json()["kind"] == "data"

    def test_bad_config_is_config_error(self, client):
        req = small_request(client, sigma=-2.0)
        resp = client.post("/experiments/train-eval", json=req)
        assert resp.status_code == 400
        assert resp.json()["kind"] == "config"

    def test_shape_violation_is_422(self, client):
        resp = client.post("/experiments/train-eval", json={"seeds": [1]})
        assert resp.status_code == 422
