import pytest
from fastapi.testclient import TestClient

from gcx.server import create_app


@pytest.fixture(scope="module")
def client(quick_run_dir):
    app = create_app(quick_run_dir)
    with TestClient(app) as c:
        yield c


def discover(client, k=10, layer=None, seed=0, algorithm="kmeans", params=None, dr=None):
    body = {
        "layer": layer if layer is not None else 2,
        "algorithm": algorithm,
        "params": params if params is not None else {"k": k},
        "seed": seed,
    }
    if dr:
        body["dr"] = dr
    return client.post("/api/concepts", json=body)


class TestRunEndpoint:
    def test_fields(self, client):
        r = client.get("/api/run")
        assert r.status_code == 200
        body = r.json()
        assert body["task"] == "node_classification"
        assert body["class_names"] == ["base", "top", "middle", "bottom"]
        assert body["final_conv_index"] == 2
        assert [l["kind"] for l in body["layers"]] == ["conv", "conv", "conv", "linear"]
        assert body["num_units"] == 700
        assert "metrics" in body["manifest"]


class TestDiscovery:
    def test_kmeans_returns_sizes_and_silhouette(self, client):
        r = discover(client, k=10)
        assert r.status_code == 200
        body = r.json()
        assert body["n_concepts"] == 10
        assert len(body["cluster_sizes"]) == 10
        assert sum(body["cluster_sizes"]) == 700
        assert body["silhouette"] is None or -1 <= body["silhouette"] <= 1

    def test_identical_posts_share_a_model(self, client):
        a = discover(client, k=7, seed=3).json()
        b = discover(client, k=7, seed=3).json()
        assert a["id"] == b["id"]
        assert a["cluster_sizes"] == b["cluster_sizes"]

    def test_k_zero_names_field(self, client):
        r = discover(client, params={"k": 0})
        assert r.status_code == 422
        assert any("k" in str(item.get("loc")) for item in r.json()["detail"])

    def test_bad_layer(self, client):
        r = discover(client, layer=99)
        assert r.status_code == 422
        assert any("layer" in str(item.get("loc")) for item in r.json()["detail"])

    def test_linear_layer_rejected(self, client):
        r = discover(client, layer=3)
        assert r.status_code == 422

    def test_dbscan_param_validation(self, client):
        r = discover(client, algorithm="dbscan", params={"eps": -1.0, "min_pts": 3})
        assert r.status_code == 422
        assert any("eps" in str(item.get("loc")) for item in r.json()["detail"])

    def test_pca_dr(self, client):
        r = discover(client, k=4, dr={"kind": "pca", "dims": 2})
        assert r.status_code == 200


class TestReps:
    def test_at_most_top(self, client):
        mid = discover(client, k=10).json()["id"]
        r = client.get(f"/api/concepts/{mid}/reps", params={"concept": 0, "n": 1, "top": 5})
        assert r.status_code == 200
        reps = r.json()["representations"]
        assert 1 <= len(reps) <= 5
        sub = reps[0]["subgraph"]
        assert set(sub) >= {"parent_node_ids", "edges", "anchor_ids", "hop_radius"}
        assert "node_labels" in sub  # original labels travel with the payload

    def test_node_order(self, client):
        mid = discover(client, k=10).json()["id"]
        run = client.get("/api/run").json()
        assignments_probe = client.get(
            f"/api/concepts/{mid}/reps",
            params={"concept": 0, "n": 0, "top": 1, "order": "centroid"},
        ).json()
        node = assignments_probe["representations"][0]["node"]
        r = client.get(
            f"/api/concepts/{mid}/reps",
            params={"concept": 0, "n": 1, "top": 3, "order": f"node:{node}"},
        )
        assert r.status_code == 200
        assert r.json()["representations"][0]["node"] == node

    def test_bad_order(self, client):
        mid = discover(client, k=10).json()["id"]
        r = client.get(f"/api/concepts/{mid}/reps", params={"concept": 0, "n": 1, "order": "weird"})
        assert r.status_code == 422

    def test_unknown_model_404(self, client):
        r = client.get("/api/concepts/999/reps", params={"concept": 0, "n": 1})
        assert r.status_code == 404

    def test_unknown_concept_404(self, client):
        mid = discover(client, k=10).json()["id"]
        r = client.get(f"/api/concepts/{mid}/reps", params={"concept": 42, "n": 1})
        assert r.status_code == 404


class TestScores:
    def test_fields_and_cache(self, client):
        mid = discover(client, k=10).json()["id"]
        r = client.get(f"/api/concepts/{mid}/scores", params={"n": 1, "top": 3})
        assert r.status_code == 200
        body = r.json()
        assert 0.0 <= body["completeness"]["score"] <= 1.0
        assert "purity" in body
        assert body["heuristics"] is not None  # ba_shapes
        again = client.get(f"/api/concepts/{mid}/scores", params={"n": 1, "top": 3})
        assert again.json() == body


class TestExplainEndpoints:
    def test_node(self, client):
        mid = discover(client, k=10).json()["id"]
        r = client.get("/api/explain/node/301", params={"model": mid, "n": 1, "top": 3})
        assert r.status_code == 200
        body = r.json()
        assert body["node"] == 301
        assert len(body["local_representations"]) >= 1
        assert body["local_representations"][0]["node"] == 301

    def test_node_out_of_range(self, client):
        mid = discover(client, k=10).json()["id"]
        r = client.get("/api/explain/node/9999", params={"model": mid, "n": 1})
        assert r.status_code == 404

    def test_graph_rejected_on_node_task(self, client):
        mid = discover(client, k=10).json()["id"]
        r = client.get("/api/explain/graph/0", params={"model": mid, "n": 1})
        assert r.status_code == 404


class TestActivations:
    def test_pca_two_dims(self, client):
        r = client.get("/api/activations", params={"layer": 2, "dr": "pca:2"})
        assert r.status_code == 200
        body = r.json()
        assert len(body["points"]) == 700
        assert len(body["points"][0]) == 2
        assert len(body["labels"]) == 700

    def test_concept_coloring(self, client):
        mid = discover(client, k=10).json()["id"]
        r = client.get("/api/activations", params={"layer": 2, "dr": "pca:2", "model": mid})
        assert len(r.json()["concepts"]) == 700

    def test_bad_dr(self, client):
        r = client.get("/api/activations", params={"layer": 2, "dr": "tsne:2"})
        assert r.status_code == 422
