"""Loader for graph-classification corpora in the TU text format.

Expected files under a directory, named ``<PREFIX>_A.txt`` (comma-separated
1-indexed edge pairs), ``<PREFIX>_graph_indicator.txt`` (1-indexed graph id
per node line), ``<PREFIX>_graph_labels.txt`` (one integer per graph), and
optionally ``<PREFIX>_node_labels.txt`` (one integer tag per node, one-hot
encoded into node features).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .graph import Dataset, Graph, Task, make_split


@dataclass(frozen=True)
class TuCorpus:
    directory: str
    prefix: str

    def path(self, suffix: str) -> str:
        return os.path.join(self.directory, f"{self.prefix}_{suffix}.txt")


def _read_int_lines(path: str) -> list[int]:
    with open(path) as fh:
        return [int(line.strip()) for line in fh if line.strip()]


def _read_edge_lines(path: str) -> list[tuple[int, int]]:
    edges = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise FormatError(f"bad edge line {line!r} in {path}")
            edges.append((int(parts[0]), int(parts[1])))
    return edges


def load_tu_dataset(corpus: TuCorpus, seed: int = 0, name: str | None = None) -> Dataset:
    """Parse a TU corpus into a graph-classification Dataset.

    Directed duplicate pairs collapse to one undirected edge; node ids are
    re-based per graph; graph labels are re-mapped to 0..C-1.
    """
    for suffix in ("A", "graph_indicator", "graph_labels"):
        path = corpus.path(suffix)
        if not os.path.exists(path):
            raise FileNotFoundError(path)

    indicator = _read_int_lines(corpus.path("graph_indicator"))
    raw_labels = _read_int_lines(corpus.path("graph_labels"))
    num_graphs = len(raw_labels)
    if not indicator:
        raise FormatError("graph_indicator file is empty")

    node_graph = [g - 1 for g in indicator]
    counts = [0] * num_graphs
    local_id = []
    for g in node_graph:
        if not (0 <= g < num_graphs):
            raise FormatError(f"node references nonexistent graph {g + 1}")
        local_id.append(counts[g])
        counts[g] += 1
    if min(counts) == 0:
        raise FormatError("corpus contains a graph with zero nodes")

    tags = None
    tags_path = corpus.path("node_labels")
    if os.path.exists(tags_path):
        tags = _read_int_lines(tags_path)
        if len(tags) != len(indicator):
            raise FormatError("node_labels line count differs from graph_indicator")

    per_graph_edges: list[set] = [set() for _ in range(num_graphs)]
    n_nodes = len(indicator)
    for u1, v1 in _read_edge_lines(corpus.path("A")):
        u, v = u1 - 1, v1 - 1
        if not (0 <= u < n_nodes and 0 <= v < n_nodes):
            raise FormatError(f"edge ({u1}, {v1}) references a nonexistent node")
        if node_graph[u] != node_graph[v]:
            raise FormatError(f"edge ({u1}, {v1}) crosses graphs")
        if u == v:
            continue
        a, b = local_id[u], local_id[v]
        per_graph_edges[node_graph[u]].add((min(a, b), max(a, b)))

    label_values = sorted(set(raw_labels))
    label_map = {v: i for i, v in enumerate(label_values)}

    tag_values = sorted(set(tags)) if tags is not None else []
    tag_map = {v: i for i, v in enumerate(tag_values)}

    per_graph_tags: list[list[int]] = [[] for _ in range(num_graphs)]
    if tags is not None:
        for g, t in zip(node_graph, tags):
            per_graph_tags[g].append(tag_map[t])

    graphs = []
    for gi in range(num_graphs):
        n = counts[gi]
        if tags is not None:
            feats = np.zeros((n, len(tag_values)), dtype=np.float64)
            gt = per_graph_tags[gi]
            feats[np.arange(n), gt] = 1.0
            node_tags = gt
        else:
            feats = np.ones((n, 1), dtype=np.float64)
            node_tags = None
        graphs.append(
            Graph.build(
                n,
                sorted(per_graph_edges[gi]),
                node_features=feats,
                node_tags=node_tags,
                graph_label=label_map[raw_labels[gi]],
            )
        )

    return Dataset(
        graphs=tuple(graphs),
        task=Task.GRAPH,
        num_classes=len(label_values),
        train_mask=make_split(num_graphs, seed),
        seed=seed,
        name=name or corpus.prefix.lower(),
    )
