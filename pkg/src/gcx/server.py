"""HTTP query service over a run artifact; the surface the browser UI consumes.

Concept discovery requests are serialized per artifact (writes append-only);
reads operate on immutable snapshots and may run concurrently.
"""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import cluster as cl
from .concepts import DiscoveryConfig, RepresentationQuery, node_class_per_row, top_representations
from .errors import EmptyConceptError, GcxError, InputError, UnsupportedLayerError
from .explain import explain_graph, explain_node
from .graph import Task
from .runs import RunArtifact
from .scoring import compute_scores

SILHOUETTE_SAMPLE_CAP = 2000


class DrSpec(BaseModel):
    kind: str = "none"
    dims: Optional[int] = None


class ConceptRequest(BaseModel):
    layer: int
    algorithm: str
    params: dict = Field(default_factory=dict)
    dr: DrSpec = Field(default_factory=DrSpec)
    seed: int = 0


def _field_error(field: str, msg: str) -> HTTPException:
    return HTTPException(status_code=422, detail=[{"loc": ["body", *field.split(".")], "msg": msg}])


def _to_config(req: ConceptRequest) -> DiscoveryConfig:
    if req.algorithm not in ("kmeans", "ahc", "dbscan"):
        raise _field_error("algorithm", f"unknown algorithm {req.algorithm!r}")
    pca_dims = None
    if req.dr.kind == "pca":
        if req.dr.dims is None or req.dr.dims < 1:
            raise _field_error("dr.dims", "pca dims must be a positive integer")
        pca_dims = req.dr.dims
    elif req.dr.kind != "none":
        raise _field_error("dr.kind", "dr kind must be 'none' or 'pca'")
    if req.algorithm in ("kmeans", "ahc"):
        k = req.params.get("k")
        if not isinstance(k, int) or k < 1:
            raise _field_error("params.k", "k must be a positive integer")
        return DiscoveryConfig(algorithm=req.algorithm, k=k, pca_dims=pca_dims, seed=req.seed)
    eps = req.params.get("eps")
    min_pts = req.params.get("min_pts")
    if not isinstance(eps, (int, float)) or eps <= 0:
        raise _field_error("params.eps", "eps must be > 0")
    if not isinstance(min_pts, int) or min_pts < 1:
        raise _field_error("params.min_pts", "min_pts must be >= 1")
    return DiscoveryConfig(
        algorithm="dbscan", eps=float(eps), min_pts=min_pts, pca_dims=pca_dims, seed=req.seed
    )


def _silhouette_or_none(points: np.ndarray, clustering: cl.Clustering, seed: int) -> Optional[float]:
    if clustering.n_clusters < 2:
        return None
    labels = clustering.assignments
    keep = np.flatnonzero(labels != cl.NOISE)
    if len(keep) > SILHOUETTE_SAMPLE_CAP:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(keep, size=SILHOUETTE_SAMPLE_CAP, replace=False))
    sub_labels = labels[keep]
    present = np.unique(sub_labels)
    if len(present) < 2:
        return None
    remap = {c: i for i, c in enumerate(present)}
    sub = cl.Clustering(
        assignments=np.asarray([remap[c] for c in sub_labels], dtype=np.int64),
        n_clusters=len(present),
        algorithm=clustering.algorithm,
        params=clustering.params,
    )
    try:
        return float(cl.silhouette(points[keep], sub))
    except (InputError, GcxError):
        return None


def _parse_order(order: str) -> tuple[str, Optional[int]]:
    if order == "centroid":
        return "centroid", None
    if order.startswith("node:"):
        try:
            return "node", int(order.split(":", 1)[1])
        except ValueError:
            pass
    raise HTTPException(status_code=422, detail=[{"loc": ["query", "order"], "msg": "use 'centroid' or 'node:<id>'"}])


def create_app(run_dir: str, frontend_dir: Optional[str] = None) -> FastAPI:
    artifact = RunArtifact(run_dir)
    app = FastAPI(title="gcx concept service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.artifact = artifact

    def _model_or_404(model_id: int):
        if model_id not in artifact.list_concept_models():
            raise HTTPException(status_code=404, detail=f"concept model {model_id} not found")
        return artifact.load_concept_model(model_id)

    @app.get("/api/run")
    def run_info():
        trace = artifact.trace
        layers = [
            {
                "index": i,
                "kind": layer.kind,
                "row_unit": layer.row_unit,
                "width": int(layer.data.shape[1]),
            }
            for i, layer in enumerate(trace.layers)
        ]
        models = []
        for mid in artifact.list_concept_models():
            with open(artifact.concept_model_path(mid)) as fh:
                d = json.load(fh)
            models.append({"id": mid, "layer": d["layer"], "config": d["config"], "n_concepts": d["n_clusters"]})
        return {
            "manifest": artifact.manifest,
            "layers": layers,
            "final_conv_index": trace.final_conv_index,
            "class_names": artifact.manifest.get("class_names"),
            "task": artifact.dataset.task.value,
            "num_units": artifact.dataset.num_units,
            "total_nodes": artifact.dataset.total_nodes,
            "concept_models": models,
        }

    @app.post("/api/concepts")
    def discover(req: ConceptRequest):
        config = _to_config(req)
        trace = artifact.trace
        if not (0 <= req.layer < len(trace.layers)):
            raise _field_error("layer", "layer index out of range")
        try:
            model_id, model = artifact.add_concept_model(req.layer, config)
        except UnsupportedLayerError as exc:
            raise _field_error("layer", str(exc))
        except InputError as exc:
            raise _field_error("params", str(exc))
        sil = _silhouette_or_none(model.fitted_points, model.clustering, config.seed)
        return {
            "id": model_id,
            "n_concepts": model.n_concepts,
            "cluster_sizes": model.clustering.sizes(),
            "noise_count": int((model.assignments == cl.NOISE).sum()),
            "silhouette": sil,
        }

    @app.get("/api/concepts")
    def list_models():
        return {"ids": artifact.list_concept_models()}

    @app.get("/api/concepts/{model_id}/scores")
    def scores(model_id: int, n: int = Query(..., ge=0), top: int = Query(3, ge=2)):
        _model_or_404(model_id)
        return compute_scores(artifact, model_id, n=n, top_m=top)

    @app.get("/api/concepts/{model_id}/reps")
    def reps(
        model_id: int,
        concept: int,
        n: int = Query(..., ge=0),
        top: int = Query(5, ge=1),
        order: str = "centroid",
    ):
        model = _model_or_404(model_id)
        kind, node = _parse_order(order)
        if not (0 <= concept < model.n_concepts):
            raise HTTPException(status_code=404, detail=f"concept {concept} not found")
        query = RepresentationQuery(concept=concept, n=n, top_m=top, order=kind, node=node)
        try:
            found = top_representations(model, artifact.dataset, query)
        except EmptyConceptError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except InputError as exc:
            raise HTTPException(status_code=422, detail=[{"loc": ["query"], "msg": str(exc)}])
        return {
            "concept": concept,
            "representations": [
                {
                    "subgraph": r.subgraph.to_dict(),
                    "node": r.node,
                    "graph_index": r.graph_index,
                    "distance": r.distance,
                }
                for r in found
            ],
        }

    @app.get("/api/explain/node/{node_id}")
    def explain_node_endpoint(node_id: int, model: int, n: int = Query(..., ge=0), top: int = Query(5, ge=1)):
        cmodel = _model_or_404(model)
        try:
            result = explain_node(cmodel, artifact.dataset, node_id, n=n, top_m=top)
        except InputError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return result.to_dict(artifact.dataset)

    @app.get("/api/explain/graph/{graph_id}")
    def explain_graph_endpoint(graph_id: int, model: int, n: int = Query(..., ge=0)):
        cmodel = _model_or_404(model)
        try:
            result = explain_graph(cmodel, artifact.dataset, graph_id, n=n)
        except InputError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return result.to_dict(artifact.dataset)

    @app.get("/api/activations")
    def activations(layer: int, dr: str = "pca:2", model: Optional[int] = None):
        trace = artifact.trace
        if not (0 <= layer < len(trace.layers)):
            raise HTTPException(status_code=422, detail=[{"loc": ["query", "layer"], "msg": "layer out of range"}])
        points = trace.layers[layer].data
        if dr.startswith("pca:"):
            dims = int(dr.split(":", 1)[1])
            if points.shape[1] > dims:
                points = cl.pca(points, dims)
        elif dr != "none":
            raise HTTPException(status_code=422, detail=[{"loc": ["query", "dr"], "msg": "use 'none' or 'pca:<dims>'"}])
        row_unit = trace.layers[layer].row_unit
        if row_unit == "node":
            labels = node_class_per_row(artifact.dataset)
        else:
            labels = artifact.dataset.unit_labels
        out = {
            "layer": layer,
            "row_unit": row_unit,
            "points": [[float(x) for x in row] for row in points],
            "labels": [int(x) for x in labels],
        }
        if model is not None:
            cmodel = _model_or_404(model)
            if cmodel.layer == layer and row_unit == "node":
                out["concepts"] = [int(x) for x in cmodel.assignments]
        return out

    if frontend_dir and os.path.isdir(frontend_dir):
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
