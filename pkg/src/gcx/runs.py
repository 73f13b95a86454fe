"""Run artifacts: on-disk persistence for datasets, models, traces and concepts.

A run directory holds a manifest (with content hashes), the dataset, a model
checkpoint, the activation trace (one .npy per layer), appended concept models
and cached score reports. Writers only ever append; every file is written
deterministically (sorted JSON keys, plain .npy) so repeated runs with the
same seeds are byte-identical.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import re
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cluster as cl
from .concepts import ConceptModel, DiscoveryConfig, discover_concepts
from .errors import HashMismatchError, InputError, MissingArtifactError, VersionMismatchError
from .gnn import ActivationTrace, LayerSpec, ModelConfig, TraceLayer, TrainedModel, forward
from .graph import Dataset, Task

RUN_FORMAT_VERSION = 1


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write(path: str, data: bytes):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, arr)
    return buf.getvalue()


def config_to_dict(config: ModelConfig) -> dict:
    return {
        "layers": [
            {"kind": l.kind, "width": l.width, "activation": l.activation}
            for l in config.layers
        ],
        "task": config.task.value,
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "seed": config.seed,
    }


def config_from_dict(d: dict) -> ModelConfig:
    return ModelConfig(
        layers=tuple(LayerSpec(l["kind"], l["width"], l["activation"]) for l in d["layers"]),
        task=Task(d["task"]),
        learning_rate=d["learning_rate"],
        epochs=d["epochs"],
        seed=d["seed"],
    )


def checkpoint_to_dict(model: TrainedModel) -> dict:
    return {
        "version": RUN_FORMAT_VERSION,
        "config": config_to_dict(model.config),
        "weights": [
            {"w": [[float(x) for x in row] for row in w], "b": [float(x) for x in b]}
            for w, b in model.weights
        ],
        "train_accuracy": model.train_accuracy,
        "test_accuracy": model.test_accuracy,
    }


def checkpoint_from_dict(d: dict) -> TrainedModel:
    if d.get("version") != RUN_FORMAT_VERSION:
        raise VersionMismatchError(f"checkpoint version {d.get('version')} != {RUN_FORMAT_VERSION}")
    return TrainedModel(
        config=config_from_dict(d["config"]),
        weights=tuple(
            (np.asarray(wb["w"], dtype=np.float64), np.asarray(wb["b"], dtype=np.float64))
            for wb in d["weights"]
        ),
        train_accuracy=d["train_accuracy"],
        test_accuracy=d["test_accuracy"],
    )


def save_run(
    run_dir: str,
    dataset: Dataset,
    model: TrainedModel,
    trace: ActivationTrace,
    extra_manifest: Optional[dict] = None,
) -> None:
    """Write a complete run artifact; refuses to overwrite an existing one."""
    manifest_path = os.path.join(run_dir, "manifest.json")
    if os.path.exists(manifest_path):
        raise InputError(f"run dir {run_dir} already holds an artifact")
    dataset_bytes = (dataset.dumps() + "\n").encode()
    checkpoint_bytes = _dumps(checkpoint_to_dict(model)).encode()
    hashes = {
        "dataset.json": _sha256(dataset_bytes),
        "checkpoint.json": _sha256(checkpoint_bytes),
    }
    layer_meta = []
    trace_files = {}
    for i, layer in enumerate(trace.layers):
        rel = f"trace/layer_{i:02d}.npy"
        data = _npy_bytes(np.ascontiguousarray(layer.data, dtype=np.float64))
        trace_files[rel] = data
        hashes[rel] = _sha256(data)
        layer_meta.append({"kind": layer.kind, "row_unit": layer.row_unit, "file": rel})
    manifest = {
        "version": RUN_FORMAT_VERSION,
        "dataset": {
            "name": dataset.name,
            "seed": dataset.seed,
            "task": dataset.task.value,
            "num_classes": dataset.num_classes,
            "num_graphs": len(dataset.graphs),
            "total_nodes": dataset.total_nodes,
        },
        "class_names": list(dataset.class_names) if dataset.class_names else None,
        "metrics": {
            "train_accuracy": model.train_accuracy,
            "test_accuracy": model.test_accuracy,
        },
        "trace": {"layers": layer_meta, "final_conv_index": trace.final_conv_index},
        "hashes": hashes,
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    _write(os.path.join(run_dir, "dataset.json"), dataset_bytes)
    _write(os.path.join(run_dir, "checkpoint.json"), checkpoint_bytes)
    for rel, data in trace_files.items():
        _write(os.path.join(run_dir, rel), data)
    _write(manifest_path, _dumps(manifest).encode())


def _read(path: str) -> bytes:
    if not os.path.exists(path):
        raise MissingArtifactError(path)
    with open(path, "rb") as fh:
        return fh.read()


class RunArtifact:
    """A loaded run directory; verifies version and content hashes up front."""

    def __init__(self, run_dir: str):
        self.run_dir = run_dir
        manifest_bytes = _read(os.path.join(run_dir, "manifest.json"))
        self.manifest = json.loads(manifest_bytes)
        if self.manifest.get("version") != RUN_FORMAT_VERSION:
            raise VersionMismatchError(
                f"artifact version {self.manifest.get('version')} != {RUN_FORMAT_VERSION}"
            )
        hashes = self.manifest["hashes"]
        contents = {}
        for rel, expected in hashes.items():
            data = _read(os.path.join(run_dir, rel))
            if _sha256(data) != expected:
                raise HashMismatchError(f"{rel} does not match its recorded hash")
            contents[rel] = data
        self.dataset = Dataset.loads(contents["dataset.json"].decode())
        self.model = checkpoint_from_dict(json.loads(contents["checkpoint.json"]))
        layers = []
        for meta in self.manifest["trace"]["layers"]:
            arr = np.load(io.BytesIO(contents[meta["file"]]))
            layers.append(TraceLayer(meta["kind"], meta["row_unit"], arr))
        self.trace = ActivationTrace(
            layers=tuple(layers),
            final_conv_index=self.manifest["trace"]["final_conv_index"],
        )
        self._lock = threading.Lock()

    # -- concept models (append-only) ---------------------------------------

    def _concept_dir(self) -> str:
        return os.path.join(self.run_dir, "concepts")

    def list_concept_models(self) -> list[int]:
        d = self._concept_dir()
        if not os.path.isdir(d):
            return []
        ids = []
        for name in os.listdir(d):
            m = re.fullmatch(r"(\d{3})\.json", name)
            if m:
                ids.append(int(m.group(1)))
        return sorted(ids)

    def concept_model_path(self, model_id: int) -> str:
        return os.path.join(self._concept_dir(), f"{model_id:03d}.json")

    def _concept_key(self, layer: int, config: DiscoveryConfig) -> str:
        return _dumps({"layer": layer, "config": config.to_dict()})

    def find_concept_model(self, layer: int, config: DiscoveryConfig) -> Optional[int]:
        key = self._concept_key(layer, config)
        for model_id in self.list_concept_models():
            d = json.loads(_read(self.concept_model_path(model_id)))
            if self._concept_key(d["layer"], DiscoveryConfig.from_dict(d["config"])) == key:
                return model_id
        return None

    def add_concept_model(self, layer: int, config: DiscoveryConfig) -> tuple[int, ConceptModel]:
        """Discover (or reuse) a concept model; identical configs share one id."""
        with self._lock:
            existing = self.find_concept_model(layer, config)
            if existing is not None:
                return existing, self.load_concept_model(existing)
            model = discover_concepts(self.trace, layer, config, self.dataset)
            model_id = (max(self.list_concept_models(), default=-1)) + 1
            payload = {
                "layer": layer,
                "config": config.to_dict(),
                "assignments": [int(x) for x in model.assignments],
                "n_clusters": model.n_concepts,
                "centroids": None
                if model.clustering.centroids is None
                else [[float(x) for x in row] for row in model.clustering.centroids],
                "inertia": model.clustering.inertia,
                "core_mask": None
                if model.clustering.core_mask is None
                else [bool(x) for x in model.clustering.core_mask],
                "pca": None
                if model.pca_transform is None
                else {
                    "mean": [float(x) for x in model.pca_transform.mean],
                    "components": [[float(x) for x in row] for row in model.pca_transform.components],
                    "eigenvalues": [float(x) for x in model.pca_transform.eigenvalues],
                },
                "dendrogram": None
                if model.dendrogram is None
                else [[a, b, d, s] for a, b, d, s in model.dendrogram.merges],
            }
            _write(self.concept_model_path(model_id), _dumps(payload).encode())
            return model_id, model

    def load_concept_model(self, model_id: int) -> ConceptModel:
        d = json.loads(_read(self.concept_model_path(model_id)))
        config = DiscoveryConfig.from_dict(d["config"])
        clustering = cl.Clustering(
            assignments=np.asarray(d["assignments"], dtype=np.int64),
            n_clusters=d["n_clusters"],
            algorithm=config.algorithm,
            params=config.to_dict(),
            seed=config.seed,
            centroids=None if d["centroids"] is None else np.asarray(d["centroids"], dtype=np.float64),
            inertia=d.get("inertia"),
            core_mask=None if d["core_mask"] is None else np.asarray(d["core_mask"], dtype=bool),
        )
        transform = None
        if d["pca"] is not None:
            transform = cl.PcaTransform(
                mean=np.asarray(d["pca"]["mean"], dtype=np.float64),
                components=np.asarray(d["pca"]["components"], dtype=np.float64),
                eigenvalues=np.asarray(d["pca"]["eigenvalues"], dtype=np.float64),
            )
        dendrogram = None
        if d["dendrogram"] is not None:
            dendrogram = cl.Dendrogram(
                merges=tuple((int(a), int(b), float(dist), int(s)) for a, b, dist, s in d["dendrogram"]),
                num_points=len(d["assignments"]),
            )
        return ConceptModel(
            clustering=clustering,
            layer=d["layer"],
            config=config,
            dataset=self.dataset,
            trace=self.trace,
            pca_transform=transform,
            dendrogram=dendrogram,
        )

    # -- cached scores -------------------------------------------------------

    def score_cache_path(self, model_id: int, n: int, top_m: int) -> str:
        return os.path.join(self.run_dir, "scores", f"{model_id:03d}_n{n}_top{top_m}.json")

    def load_cached_score(self, model_id: int, n: int, top_m: int) -> Optional[dict]:
        path = self.score_cache_path(model_id, n, top_m)
        if os.path.exists(path):
            return json.loads(_read(path))
        return None

    def store_score(self, model_id: int, n: int, top_m: int, report: dict) -> None:
        with self._lock:
            _write(self.score_cache_path(model_id, n, top_m), _dumps(report).encode())


def load_run(run_dir: str) -> RunArtifact:
    return RunArtifact(run_dir)


def verify_trained_accuracy(artifact: RunArtifact) -> bool:
    """Re-run forward and confirm the stored accuracies (trace consistency)."""
    logp, _ = forward(artifact.model, artifact.dataset)
    labels = artifact.dataset.unit_labels
    mask = artifact.dataset.train_mask
    train = float((logp[mask].argmax(axis=1) == labels[mask]).mean())
    test = float((logp[~mask].argmax(axis=1) == labels[~mask]).mean())
    return (
        abs(train - artifact.model.train_accuracy) < 1e-12
        and abs(test - artifact.model.test_accuracy) < 1e-12
    )
