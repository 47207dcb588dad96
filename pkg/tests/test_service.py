"""HTTP service routes and error mapping."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from hsicwae import __version__
from hsicwae.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def small_config(tmp_path, **sections):
    doc = {
        "out_dir": str(tmp_path / "run"),
        "synthetic": {"samples_per_level": 8, "seed": 2},
        "training": {"d_z": 4, "steps": 3, "batch_size": 8, "seed": 0,
                     "encoder_hidden": [16], "decoder_hidden": [16]},
        "eval": {"n_generate": 10, "k_neighbors": 2, "permutations": 50,
                 "kde_points": 16},
    }
    for key, value in sections.items():
        doc.setdefault(key, {}).update(value)
    return doc


class TestHealth:
    def test_reports_version(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok", "version": __version__}


class TestPipelineRoutes:
    def test_gen_train_eval_chain(self, client, tmp_path):
        cfg = small_config(tmp_path)
        r = client.post("/gen-data", json={"config": cfg})
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["n_total"] == 40
        assert sum(body["counts_per_level"].values()) == 40

        r = client.post("/train", json={"config": cfg})
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["steps"] == 3
        assert set(body["final"]) == {"step", "recon", "mmd", "hsic_ind",
                                      "hsic_dep", "total"}

        r = client.post("/eval", json={"config": cfg})
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["d_z"] == 4
        assert len(body["axes"]) == 4
        assert body["regression"]["mode"] == "pooled"
        # the route result is exactly the artifact the run wrote
        on_disk = json.loads(
            (tmp_path / "run" / "summary.json").read_text())
        assert body == on_disk

    def test_eval_accepts_explicit_checkpoint(self, client, tmp_path):
        cfg = small_config(tmp_path)
        assert client.post("/gen-data", json={"config": cfg}).status_code == 200
        assert client.post("/train", json={"config": cfg}).status_code == 200
        ckpt = str(tmp_path / "run" / "checkpoint.txt")
        r = client.post("/eval", json={"config": cfg, "checkpoint": ckpt})
        assert r.status_code == 200
        assert r.json()["checkpoint"] == ckpt


class TestHsicRoute:
    def test_hsic_excludes_irrelevant_fields(self, client):
        rng = np.random.default_rng(0)
        x = rng.random((20, 1)).tolist()
        r = client.post("/hsic", json={"x": x, "y": x})
        assert r.status_code == 200
        body = r.json()
        assert body["statistic"] == "hsic_b"
        assert body["p_value"] == pytest.approx(1 / 201)
        assert "n_x" not in body  # mmd-only fields dropped from the body

    def test_mmd_excludes_test_fields(self, client):
        rng = np.random.default_rng(1)
        r = client.post("/hsic", json={
            "x": rng.random((12, 2)).tolist(),
            "y": (rng.random((12, 2)) + 3).tolist(),
            "statistic": "mmd", "kernel": "imq",
        })
        assert r.status_code == 200
        body = r.json()
        assert body["statistic"] == "mmd_u_sq"
        assert body["value"] > 0
        assert "p_value" not in body and "n" not in body

    def test_seed_controls_the_null(self, client):
        rng = np.random.default_rng(2)
        payload = {"x": rng.random((15, 1)).tolist(),
                   "y": rng.random((15, 1)).tolist(), "seed": 7}
        a = client.post("/hsic", json=payload).json()
        b = client.post("/hsic", json=payload).json()
        assert a == b


class TestErrorMapping:
    def test_validation_error_is_400_config(self, client):
        r = client.post("/hsic", json={"x": [[1.0]]})  # y missing
        assert r.status_code == 400
        body = r.json()
        assert body["kind"] == "config"
        assert "y" in body["message"]

    def test_unknown_config_key_is_400(self, client, tmp_path):
        cfg = small_config(tmp_path)
        cfg["traning"] = {}
        r = client.post("/gen-data", json={"config": cfg})
        assert r.status_code == 400
        assert r.json()["kind"] == "config"

    def test_semantic_config_error_is_400(self, client, tmp_path):
        cfg = small_config(tmp_path)
        cfg["training"]["d_z"] = 1  # dependence terms need a split latent
        client.post("/gen-data", json={"config": cfg})
        r = client.post("/train", json={"config": cfg})
        assert r.status_code == 400
        assert "d_z" in r.json()["message"]

    def test_missing_dataset_is_404_io(self, client, tmp_path):
        r = client.post("/train",
                        json={"config": small_config(tmp_path)})
        assert r.status_code == 404
        body = r.json()
        assert body["kind"] == "io"
        assert "gen-data" in body["message"]

    def test_missing_checkpoint_is_404(self, client, tmp_path):
        cfg = small_config(tmp_path)
        client.post("/gen-data", json={"config": cfg})
        r = client.post("/eval", json={"config": cfg})
        assert r.status_code == 404
        assert r.json()["kind"] == "io"

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_numeric_abort_is_422(self, client, tmp_path):
        cfg = small_config(tmp_path)
        cfg["training"]["learning_rate"] = 1e77
        cfg["training"]["lambda2"] = 0.0
        cfg["training"]["lambda3"] = 0.0
        client.post("/gen-data", json={"config": cfg})
        r = client.post("/train", json={"config": cfg})
        assert r.status_code == 422
        body = r.json()
        assert body["kind"] == "numeric"
        assert "step" in body["message"]

    def test_extra_request_key_rejected(self, client, tmp_path):
        r = client.post("/gen-data", json={"config": small_config(tmp_path),
                                           "verbose": True})
        assert r.status_code == 400
