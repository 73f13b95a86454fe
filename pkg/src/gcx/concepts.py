"""Concept models: clusterings of a convolution layer's activation space.

A concept is a cluster of node activations. The model remembers how it was
discovered (layer, algorithm, parameters, optional PCA, seed) so any
activation row can be mapped back to a concept, and each concept can be
rendered as n-hop subgraph representations around its member nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np

from . import cluster as cl
from .errors import EmptyConceptError, InputError, UnsupportedLayerError
from .gnn import ActivationTrace
from .graph import Dataset, Graph, Subgraph, Task, n_hop_neighborhood

NOISE = cl.NOISE


@dataclass(frozen=True)
class DiscoveryConfig:
    algorithm: str  # 'kmeans' | 'ahc' | 'dbscan'
    k: Optional[int] = None
    eps: Optional[float] = None
    min_pts: Optional[int] = None
    pca_dims: Optional[int] = None  # None: cluster the raw activation space
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ("kmeans", "ahc", "dbscan"):
            raise InputError(f"unknown clustering algorithm {self.algorithm!r}")
        if self.algorithm in ("kmeans", "ahc"):
            if self.k is None or self.k < 1:
                raise InputError("k must be a positive integer")
        else:
            if self.eps is None or self.eps <= 0:
                raise InputError("eps must be > 0")
            if self.min_pts is None or self.min_pts < 1:
                raise InputError("min_pts must be >= 1")

    def to_dict(self) -> dict:
        out = {"algorithm": self.algorithm, "seed": self.seed}
        if self.k is not None:
            out["k"] = self.k
        if self.eps is not None:
            out["eps"] = self.eps
        if self.min_pts is not None:
            out["min_pts"] = self.min_pts
        if self.pca_dims is not None:
            out["pca_dims"] = self.pca_dims
        return out

    @staticmethod
    def from_dict(d: dict) -> "DiscoveryConfig":
        return DiscoveryConfig(
            algorithm=d["algorithm"], k=d.get("k"), eps=d.get("eps"),
            min_pts=d.get("min_pts"), pca_dims=d.get("pca_dims"), seed=d.get("seed", 0),
        )


@dataclass(frozen=True)
class Representation:
    """One rendered concept member: its n-hop subgraph plus provenance."""

    subgraph: Subgraph
    node: int  # global activation-row index
    graph_index: int
    distance: float


@dataclass(frozen=True)
class RepresentationQuery:
    concept: int
    n: int
    top_m: int = 5
    order: str = "centroid"  # 'centroid' | 'node'
    node: Optional[int] = None

    def __post_init__(self):
        if self.top_m < 1:
            raise InputError("top_m must be >= 1")
        if self.n < 0:
            raise InputError("n must be >= 0")
        if self.order not in ("centroid", "node"):
            raise InputError("order must be 'centroid' or 'node'")
        if self.order == "node" and self.node is None:
            raise InputError("order 'node' requires a node id")


@dataclass(frozen=True)
class ConceptModel:
    clustering: cl.Clustering
    layer: int
    config: DiscoveryConfig
    dataset: Dataset
    trace: ActivationTrace
    pca_transform: Optional[cl.PcaTransform] = None
    dendrogram: Optional[cl.Dendrogram] = None

    @property
    def n_concepts(self) -> int:
        return self.clustering.n_clusters

    @property
    def assignments(self) -> np.ndarray:
        return self.clustering.assignments

    @cached_property
    def fitted_points(self) -> np.ndarray:
        """The rows the clustering was fitted on (post-DR when PCA is active)."""
        raw = self.trace.layers[self.layer].data
        if self.pca_transform is not None:
            return self.pca_transform.transform(raw)
        return raw

    def predictions(self) -> np.ndarray:
        return self.trace.predictions


def discover_concepts(
    trace: ActivationTrace, layer: int, config: DiscoveryConfig, dataset: Dataset
) -> ConceptModel:
    """Fit the configured clustering on one convolution layer's activations."""
    if not (0 <= layer < len(trace.layers)):
        raise InputError(f"layer {layer} out of range")
    tl = trace.layers[layer]
    if tl.kind != "conv":
        raise UnsupportedLayerError(
            f"concept discovery runs on convolution layers, not {tl.kind!r}"
        )
    points = tl.data
    transform = None
    if config.pca_dims is not None:
        transform = cl.fit_pca(points, config.pca_dims)
        points = transform.transform(points)
    dendrogram = None
    if config.algorithm == "kmeans":
        clustering = cl.kmeans(points, config.k, config.seed)
    elif config.algorithm == "ahc":
        clustering, dendrogram = cl.ahc_ward(points, config.k)
    else:
        clustering = cl.dbscan(points, config.eps, config.min_pts)
    return ConceptModel(
        clustering=clustering,
        layer=layer,
        config=config,
        dataset=dataset,
        trace=trace,
        pca_transform=transform,
        dendrogram=dendrogram,
    )


def _to_clustering_space(model: ConceptModel, row: np.ndarray) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64).ravel()
    raw_dim = model.trace.layers[model.layer].data.shape[1]
    fit_dim = model.fitted_points.shape[1]
    if model.pca_transform is not None and len(row) == raw_dim:
        return model.pca_transform.transform(row[None, :])[0]
    if len(row) == fit_dim:
        return row
    raise InputError(f"activation vector has dim {len(row)}, expected {raw_dim} or {fit_dim}")


def assign_concept(model: ConceptModel, trace_row: np.ndarray) -> int:
    """Concept id for an activation vector (NOISE for DBSCAN outliers)."""
    row = _to_clustering_space(model, trace_row)
    clustering = model.clustering
    if clustering.algorithm == "kmeans":
        return int(cl.nearest_center(row[None, :], clustering.centroids)[0])
    # AHC/DBSCAN: fitted rows keep their stored assignment exactly.
    fitted = model.fitted_points
    hits = np.flatnonzero((fitted == row).all(axis=1))
    if hits.size:
        return int(clustering.assignments[hits[0]])
    if clustering.algorithm == "ahc":
        return int(cl.nearest_center(row[None, :], clustering.centroids)[0])
    # DBSCAN: adopt the nearest core point's cluster when within eps.
    core_idx = np.flatnonzero(clustering.core_mask)
    if core_idx.size == 0:
        return NOISE
    d2 = ((fitted[core_idx] - row) ** 2).sum(axis=1)
    best = int(np.argmin(d2))
    if np.sqrt(d2[best]) <= model.config.eps:
        return int(clustering.assignments[core_idx[best]])
    return NOISE


def concept_members(model: ConceptModel, concept: int) -> np.ndarray:
    return np.flatnonzero(model.assignments == concept)


def _member_distances(model: ConceptModel, concept: int, reference: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    members = concept_members(model, concept)
    pts = model.fitted_points[members]
    return members, np.sqrt(((pts - reference) ** 2).sum(axis=1))


def _concept_reference(model: ConceptModel, concept: int) -> np.ndarray:
    if model.clustering.centroids is not None:
        return model.clustering.centroids[concept]
    members = concept_members(model, concept)
    return model.fitted_points[members].mean(axis=0)


def build_representation(model: ConceptModel, node: int, n: int, distance: float = 0.0) -> Representation:
    gi, local = model.dataset.locate_node(node)
    sub = n_hop_neighborhood(model.dataset.graphs[gi], local, n)
    return Representation(subgraph=sub, node=node, graph_index=gi, distance=distance)


def top_representations(model: ConceptModel, dataset: Dataset, q: RepresentationQuery) -> list[Representation]:
    """Concept members closest to the centroid (or to a queried instance),
    rendered as n-hop subgraphs. The queried instance's own view comes first."""
    members = concept_members(model, q.concept)
    if members.size == 0:
        raise EmptyConceptError(f"concept {q.concept} has no members")
    if q.order == "centroid":
        reference = _concept_reference(model, q.concept)
    else:
        if not (0 <= q.node < len(model.assignments)):
            raise InputError(f"node {q.node} out of range")
        reference = model.fitted_points[q.node]
    _, dists = _member_distances(model, q.concept, reference)
    order = np.lexsort((members, dists))  # distance, then node id
    ranked = [int(members[i]) for i in order]
    if q.order == "node" and q.node in set(ranked):
        ranked.remove(q.node)
        ranked.insert(0, q.node)
    chosen = ranked[: q.top_m]
    dist_of = dict(zip(members.tolist(), dists.tolist()))
    return [build_representation(model, node, q.n, dist_of[node]) for node in chosen]


def _graph_index(model: ConceptModel, g: Union[Graph, int]) -> int:
    if isinstance(g, (int, np.integer)):
        if not (0 <= g < len(model.dataset.graphs)):
            raise InputError(f"graph index {g} out of range")
        return int(g)
    for i, other in enumerate(model.dataset.graphs):
        if other is g:
            return i
    for i, other in enumerate(model.dataset.graphs):
        if other == g:
            return i
    raise InputError("graph is not part of the model's dataset")


def concept_contribution(model: ConceptModel, g: Union[Graph, int]) -> dict[int, int]:
    """Histogram concept id -> node count over one graph (NOISE under -1)."""
    gi = _graph_index(model, g)
    start = int(model.dataset.node_offsets[gi])
    count = model.dataset.graphs[gi].num_nodes
    rows = model.assignments[start : start + count]
    hist: dict[int, int] = {}
    for c in rows.tolist():
        hist[c] = hist.get(c, 0) + 1
    return hist


def node_class_per_row(dataset: Dataset, predictions: Optional[np.ndarray] = None) -> np.ndarray:
    """Class of every activation row: node labels, or its graph's label."""
    if dataset.task is Task.NODE:
        if predictions is not None:
            return predictions
        return dataset.graphs[0].node_labels
    per_graph = predictions if predictions is not None else dataset.unit_labels
    return per_graph[dataset.node_graph_index]


def class_concept_distribution(
    model: ConceptModel, dataset: Dataset, use_predictions: bool = False
) -> np.ndarray:
    """Contingency table of node counts: rows are classes, columns concepts.

    DBSCAN models get one extra trailing column counting NOISE nodes.
    """
    preds = model.predictions() if use_predictions else None
    classes = node_class_per_row(dataset, preds)
    k = model.n_concepts
    with_noise = model.clustering.algorithm == "dbscan"
    table = np.zeros((dataset.num_classes, k + (1 if with_noise else 0)), dtype=np.int64)
    for cls, concept in zip(classes, model.assignments):
        col = int(concept)
        if col == NOISE:
            if not with_noise:
                raise InputError("unexpected NOISE assignment")
            col = k
        table[int(cls), col] += 1
    return table
