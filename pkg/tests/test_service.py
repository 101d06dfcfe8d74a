import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sensokit.service import create_app


def csv_bytes(rows):
    return ("\n".join(",".join(str(c) for c in row) for row in rows)).encode()


LIKING_CSV = csv_bytes(
    [[""] + [f"C{i + 1}" for i in range(8)]]
    + [[f"P{j + 1}"] + list(np.random.default_rng(j).integers(1, 10, 8)) for j in range(5)]
)
DESCRIPTIVE_CSV = csv_bytes(
    [[""] + [f"A{i + 1}" for i in range(6)]]
    + [[f"P{j + 1}"] + [round(v, 3) for v in np.random.default_rng(50 + j).uniform(1, 9, 6)]
       for j in range(5)]
)


def upload(client, content, name, role, **opts):
    options = {"role": role, "delimiter": "comma", "dataset_name": name, **opts}
    r = client.post(
        "/datasets",
        files={"file": (f"{name}.csv", content, "text/csv")},
        data={"options": json.dumps(options)},
    )
    return r


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "session")
    with TestClient(app) as c:
        yield c


class TestDatasets:
    def test_healthz(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_upload_returns_summary(self, client):
        r = upload(client, LIKING_CSV, "ham", "liking")
        assert r.status_code == 201
        body = r.json()
        assert body["summary"]["dims"] == [5, 8]
        assert body["id"].startswith("ds-")

    def test_malformed_cell_400(self, client):
        bad = csv_bytes([["", "C1"], ["P1", "abc"]])
        r = upload(client, bad, "bad", "liking")
        assert r.status_code == 400
        assert "unparseable cell r2c2 'abc'" in r.json()["error"]

    def test_unknown_extension_415(self, client):
        r = client.post(
            "/datasets",
            files={"file": ("x.parquet", b"xx", "application/octet-stream")},
            data={"options": "{}"},
        )
        assert r.status_code == 415

    def test_delete_then_404(self, client):
        ds_id = upload(client, LIKING_CSV, "ham", "liking").json()["id"]
        assert client.delete(f"/datasets/{ds_id}").status_code == 204
        assert client.get(f"/datasets/{ds_id}").status_code == 404

    def test_transpose_endpoint(self, client):
        ds_id = upload(client, LIKING_CSV, "ham", "liking").json()["id"]
        r = client.post(f"/datasets/{ds_id}/transpose")
        assert r.status_code == 201
        assert r.json()["summary"]["dims"] == [8, 5]

    def test_restart_reproduces_listing(self, tmp_path):
        app = create_app(tmp_path / "s")
        with TestClient(app) as c:
            upload(c, LIKING_CSV, "ham", "liking")
            upload(c, DESCRIPTIVE_CSV, "apple", "descriptive")
            before = c.get("/datasets").content
        app2 = create_app(tmp_path / "s")
        with TestClient(app2) as c2:
            after = c2.get("/datasets").content
        assert before == after


class TestModels:
    def test_pca_job_roundtrip(self, client):
        ds_id = upload(client, DESCRIPTIVE_CSV, "apple", "descriptive").json()["id"]
        r = client.post("/models", json={"method": "pca", "dataset": ds_id,
                                         "standardise": True, "components": 2})
        assert r.status_code == 202
        job = r.json()["id"]
        doc = client.get(f"/models/{job}").json()
        assert doc["state"] == "done"
        scores = np.array(doc["result"]["model"]["x_scores"])
        assert scores.shape == (5, 2)

    def test_missing_values_rejected_422(self, client):
        csv = csv_bytes([["", "C1", "C2", "C3"], ["P1", 1, "NA", 3],
                         ["P2", 2, 3, 4], ["P3", 1, 2, 3]])
        ds_id = upload(client, csv, "holes", "descriptive").json()["id"]
        r = client.post("/models", json={"method": "pca", "dataset": ds_id})
        assert r.status_code == 422
        assert "missing values present" in r.json()["error"]

    def test_prefmap_row_mismatch_422(self, client):
        lik = upload(client, LIKING_CSV, "ham", "liking").json()["id"]
        short = csv_bytes(
            [[""] + ["A1", "A2", "A3"]]
            + [[f"P{j}"] + [1 + j, 2, 3] for j in range(4)]
        )
        desc = upload(client, short, "short", "descriptive").json()["id"]
        r = client.post("/models", json={"method": "prefmap", "liking": lik,
                                         "descriptive": desc})
        assert r.status_code == 422
        assert "row counts differ" in r.json()["error"]

    def test_unknown_dataset_404(self, client):
        r = client.post("/models", json={"method": "pca", "dataset": "nope"})
        assert r.status_code == 404

    def test_prefmap_plots_endpoint(self, client):
        lik = upload(client, LIKING_CSV, "ham", "liking").json()["id"]
        desc = upload(client, DESCRIPTIVE_CSV, "apple", "descriptive").json()["id"]
        job = client.post("/models", json={
            "method": "prefmap", "liking": lik, "descriptive": desc,
            "direction": "internal", "engine": "plsr", "sectors": 4,
        }).json()["id"]
        plot = client.get(f"/models/{job}/plots/corr_loadings").json()
        assert sum(plot["sector_counts"]) == 8
        assert plot["rings"] == [0.7071067811865476, 1.0]

    def test_identical_requests_identical_bundles(self, client):
        ds_id = upload(client, DESCRIPTIVE_CSV, "apple", "descriptive").json()["id"]
        req = {"method": "pca", "dataset": ds_id, "standardise": False, "components": 3}
        job1 = client.post("/models", json=req).json()["id"]
        job2 = client.post("/models", json=req).json()["id"]
        r1 = client.get(f"/models/{job1}").json()["result"]
        r2 = client.get(f"/models/{job2}").json()["result"]
        assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)

    def test_conjoint_job_polls_to_done(self, client):
        rng = np.random.default_rng(0)
        lik_rows = [[""] + [f"C{i + 1}" for i in range(10)]]
        for j in range(4):
            lik_rows.append([f"P{j + 1}"] + list(rng.integers(1, 10, 10)))
        lik = upload(client, csv_bytes(lik_rows), "lik", "liking").json()["id"]
        des_rows = [["", "A"], ["P1", 1], ["P2", 2], ["P3", 1], ["P4", 2]]
        des = upload(client, csv_bytes(des_rows), "des", "design").json()["id"]
        job = client.post("/models", json={
            "method": "conjoint", "liking": [lik], "design": des,
            "design_factors": ["A"], "structure": "struct1",
        }).json()["id"]
        for _ in range(200):
            doc = client.get(f"/models/{job}").json()
            if doc.get("state") in ("done", "failed"):
                break
            time.sleep(0.05)
        assert doc["state"] == "done"
        sub = doc["result"]["conjoint_results"][0]
        assert {"random_effects", "fixed_effects", "ls_means", "pairwise"} <= set(sub)

    def test_multiple_liking_datasets_yield_sub_results(self, client):
        rng = np.random.default_rng(1)
        ids = []
        for name in ("odour", "flavour"):
            rows = [[""] + [f"C{i + 1}" for i in range(8)]]
            for j in range(4):
                rows.append([f"P{j + 1}"] + list(rng.integers(1, 10, 8)))
            ids.append(upload(client, csv_bytes(rows), name, "liking").json()["id"])
        des = upload(client, csv_bytes([["", "A"], ["P1", 1], ["P2", 2],
                                        ["P3", 1], ["P4", 2]]), "des", "design").json()["id"]
        job = client.post("/models", json={
            "method": "conjoint", "liking": ids, "design": des,
            "design_factors": ["A"], "structure": "struct1",
        }).json()["id"]
        for _ in range(400):
            doc = client.get(f"/models/{job}").json()
            if doc.get("state") in ("done", "failed"):
                break
            time.sleep(0.05)
        assert doc["state"] == "done"
        subs = doc["result"]["conjoint_results"]
        assert [s["response"] for s in subs] == ["odour", "flavour"]


class TestSegments:
    def _liking_model(self, client):
        lik = upload(client, LIKING_CSV, "ham", "liking").json()["id"]
        job = client.post("/models", json={"method": "pca", "dataset": lik,
                                           "components": 2}).json()["id"]
        return job

    def test_post_segments_registers_dataset(self, client):
        model_id = self._liking_model(client)
        r = client.post("/segments", json={
            "name": "mine", "model_id": model_id,
            "segments": [["C1", "C2", "C3"], ["C4", "C5"]],
        })
        assert r.status_code == 201
        body = r.json()
        assert body["segment_sizes"] == [3, 2]
        listing = client.get("/datasets").json()
        assert any(d["id"] == body["dataset_id"] for d in listing)
        seg_ds = client.get(f"/datasets/{body['dataset_id']}").json()
        assert seg_ds["meta"]["role"] == "characteristics"

    def test_unknown_consumer_422(self, client):
        model_id = self._liking_model(client)
        r = client.post("/segments", json={
            "name": "bad", "model_id": model_id, "segments": [["C999"]],
        })
        assert r.status_code == 422

    def test_unknown_model_404(self, client):
        r = client.post("/segments", json={"name": "x", "model_id": "nope",
                                           "segments": [["C1"]]})
        assert r.status_code == 404

    def test_listing(self, client):
        model_id = self._liking_model(client)
        client.post("/segments", json={
            "name": "mine", "model_id": model_id, "segments": [["C1"], ["C2"]],
        })
        rows = client.get("/segments").json()
        assert rows and rows[0]["name"] == "mine"
        assert rows[0]["segment_sizes"] == [1, 1]
