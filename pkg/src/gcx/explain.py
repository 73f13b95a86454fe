"""User-facing explanation bundles assembled from a concept model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .concepts import (
    ConceptModel,
    Representation,
    RepresentationQuery,
    concept_contribution,
    top_representations,
)
from .errors import InputError
from .graph import Dataset, Task

NOISE = -1


def _rep_dict(rep: Representation, dataset: Dataset) -> dict:
    return {
        "subgraph": rep.subgraph.to_dict(),
        "node": rep.node,
        "graph_index": rep.graph_index,
        "distance": rep.distance,
    }


@dataclass(frozen=True)
class NodeExplanation:
    node: int
    concept: int
    predicted_class: int
    actual_class: int
    global_reps: tuple[Representation, ...]
    local_reps: tuple[Representation, ...]

    def to_dict(self, dataset: Dataset) -> dict:
        return {
            "node": self.node,
            "concept": self.concept,
            "predicted_class": self.predicted_class,
            "actual_class": self.actual_class,
            "global_representations": [_rep_dict(r, dataset) for r in self.global_reps],
            "local_representations": [_rep_dict(r, dataset) for r in self.local_reps],
        }


@dataclass(frozen=True)
class GraphExplanation:
    graph_index: int
    predicted_class: int
    actual_class: int
    contributions: tuple[tuple[int, int], ...]  # (concept, node count), descending
    representatives: dict[int, Representation]

    def to_dict(self, dataset: Dataset) -> dict:
        return {
            "graph_index": self.graph_index,
            "predicted_class": self.predicted_class,
            "actual_class": self.actual_class,
            "contributions": [[c, n] for c, n in self.contributions],
            "representatives": {
                str(c): _rep_dict(r, dataset) for c, r in self.representatives.items()
            },
        }


def explain_node(model: ConceptModel, dataset: Dataset, node: int, n: int, top_m: int = 5) -> NodeExplanation:
    """Global (centroid-nearest) and local (instance-nearest) concept views for one node."""
    if not (0 <= node < len(model.assignments)):
        raise InputError(f"node {node} out of range")
    concept = int(model.assignments[node])
    if concept == NOISE:
        raise InputError(f"node {node} is a DBSCAN noise point; no concept to explain")
    global_reps = top_representations(
        model, dataset, RepresentationQuery(concept=concept, n=n, top_m=top_m)
    )
    local_reps = top_representations(
        model, dataset,
        RepresentationQuery(concept=concept, n=n, top_m=top_m, order="node", node=node),
    )
    predictions = model.predictions()
    if dataset.task is Task.NODE:
        predicted = int(predictions[node])
        actual = int(dataset.graphs[0].node_labels[node])
    else:
        gi, _ = dataset.locate_node(node)
        predicted = int(predictions[gi])
        actual = int(dataset.graphs[gi].graph_label)
    return NodeExplanation(
        node=node,
        concept=concept,
        predicted_class=predicted,
        actual_class=actual,
        global_reps=tuple(global_reps),
        local_reps=tuple(local_reps),
    )


def explain_graph(model: ConceptModel, dataset: Dataset, graph: int, n: int) -> GraphExplanation:
    """Concept contribution histogram plus one representative subgraph per concept."""
    if dataset.task is not Task.GRAPH:
        raise InputError("graph explanations require a graph-classification dataset")
    hist = concept_contribution(model, graph)
    ordered = sorted(hist.items(), key=lambda item: (-item[1], item[0]))
    reps: dict[int, Representation] = {}
    for concept, _count in ordered:
        if concept == NOISE:
            continue
        reps[concept] = top_representations(
            model, dataset, RepresentationQuery(concept=concept, n=n, top_m=1)
        )[0]
    predictions = model.predictions()
    return GraphExplanation(
        graph_index=graph,
        predicted_class=int(predictions[graph]),
        actual_class=int(dataset.graphs[graph].graph_label),
        contributions=tuple((int(c), int(v)) for c, v in ordered),
        representatives=reps,
    )
