"""Core graph data model and neighborhood/subgraph operations.

Graphs are undirected and simple; node ids are dense integers starting at 0.
All types are immutable after construction, so every operation here is a pure
function that is safe to call from concurrent workers.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CapacityError, InputError

ISO_NODE_BOUND = 16  # exact backtracking stays fast up to this size


def _canonical_edges(num_nodes: int, edges: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    seen = set()
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise InputError(f"self-loop on node {u}")
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise InputError(f"edge ({u}, {v}) out of range for {num_nodes} nodes")
        seen.add((u, v) if u < v else (v, u))
    return tuple(sorted(seen))


@dataclass(frozen=True)
class Graph:
    """An undirected simple graph with optional per-node labels, tags and features."""

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    node_features: np.ndarray
    node_labels: Optional[np.ndarray] = None
    node_tags: Optional[np.ndarray] = None
    graph_label: Optional[int] = None

    def __post_init__(self):
        if self.num_nodes < 0:
            raise InputError("num_nodes must be non-negative")
        if self.node_features.shape[0] != self.num_nodes:
            raise InputError("feature matrix row count must equal num_nodes")
        for name in ("node_labels", "node_tags"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != self.num_nodes:
                raise InputError(f"{name} length must equal num_nodes")

    @staticmethod
    def build(
        num_nodes: int,
        edges: Iterable[Sequence[int]],
        node_features: Optional[np.ndarray] = None,
        node_labels: Optional[Sequence[int]] = None,
        node_tags: Optional[Sequence[int]] = None,
        graph_label: Optional[int] = None,
    ) -> "Graph":
        """Normalize raw edge pairs (dedup, sort, validate) and construct a Graph."""
        if node_features is None:
            node_features = np.zeros((num_nodes, 0), dtype=np.float64)
        else:
            node_features = np.asarray(node_features, dtype=np.float64)
            if node_features.ndim != 2:
                raise InputError("node_features must be a 2-D matrix")
        labels = None if node_labels is None else np.asarray(node_labels, dtype=np.int64)
        tags = None if node_tags is None else np.asarray(node_tags, dtype=np.int64)
        return Graph(
            num_nodes=num_nodes,
            edges=_canonical_edges(num_nodes, edges),
            node_features=node_features,
            node_labels=labels,
            node_tags=tags,
            graph_label=None if graph_label is None else int(graph_label),
        )

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def feature_dim(self) -> int:
        return self.node_features.shape[1]

    @cached_property
    def adjacency(self) -> tuple[frozenset, ...]:
        adj = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edge_set

    def to_dict(self) -> dict:
        """Canonical serialization: byte-stable for equal graphs."""
        out: dict = {
            "num_nodes": self.num_nodes,
            "edges": [[u, v] for u, v in self.edges],
        }
        if self.node_labels is not None:
            out["node_labels"] = [int(x) for x in self.node_labels]
        if self.node_tags is not None:
            out["node_tags"] = [int(x) for x in self.node_tags]
        if self.feature_dim > 0:
            out["features"] = [[float(x) for x in row] for row in self.node_features]
        if self.graph_label is not None:
            out["graph_label"] = int(self.graph_label)
        return out

    @staticmethod
    def from_dict(d: dict) -> "Graph":
        return Graph.build(
            num_nodes=d["num_nodes"],
            edges=d["edges"],
            node_features=np.asarray(d["features"], dtype=np.float64) if "features" in d else None,
            node_labels=d.get("node_labels"),
            node_tags=d.get("node_tags"),
            graph_label=d.get("graph_label"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @staticmethod
    def loads(text: str) -> "Graph":
        return Graph.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.dumps() == other.dumps()

    def __hash__(self):
        return hash((self.num_nodes, self.edges))


class Task(Enum):
    NODE = "node_classification"
    GRAPH = "graph_classification"


TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class Dataset:
    """A classification corpus: one graph (node task) or many (graph task)."""

    graphs: tuple[Graph, ...]
    task: Task
    num_classes: int
    train_mask: np.ndarray  # bool, one entry per classification unit
    seed: int
    name: Optional[str] = None
    class_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.task is Task.NODE and len(self.graphs) != 1:
            raise InputError("node classification requires exactly one graph")
        if len(self.train_mask) != self.num_units:
            raise InputError("train_mask length must equal the number of units")
        labels = self.unit_labels
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise InputError("labels must lie in [0, num_classes)")

    @property
    def num_units(self) -> int:
        if self.task is Task.NODE:
            return self.graphs[0].num_nodes
        return len(self.graphs)

    @cached_property
    def unit_labels(self) -> np.ndarray:
        if self.task is Task.NODE:
            labels = self.graphs[0].node_labels
            if labels is None:
                raise InputError("node task requires node_labels")
            return labels
        labels = [g.graph_label for g in self.graphs]
        if any(label is None for label in labels):
            raise InputError("graph task requires a graph_label on every graph")
        return np.asarray(labels, dtype=np.int64)

    @cached_property
    def test_mask(self) -> np.ndarray:
        return ~self.train_mask

    @cached_property
    def total_nodes(self) -> int:
        return sum(g.num_nodes for g in self.graphs)

    @cached_property
    def node_graph_index(self) -> np.ndarray:
        """Graph index of every node row in dataset order."""
        return np.repeat(np.arange(len(self.graphs)), [g.num_nodes for g in self.graphs])

    @cached_property
    def node_offsets(self) -> np.ndarray:
        """Global row index of each graph's node 0."""
        sizes = [g.num_nodes for g in self.graphs]
        return np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)

    def locate_node(self, row: int) -> tuple[int, int]:
        """Map a global node row to (graph index, local node id)."""
        if not (0 <= row < self.total_nodes):
            raise InputError(f"node row {row} out of range")
        gi = int(self.node_graph_index[row])
        return gi, int(row - self.node_offsets[gi])

    def to_dict(self) -> dict:
        out = {
            "task": self.task.value,
            "num_classes": self.num_classes,
            "seed": self.seed,
            "train_mask": [bool(x) for x in self.train_mask],
            "graphs": [g.to_dict() for g in self.graphs],
        }
        if self.name is not None:
            out["name"] = self.name
        if self.class_names is not None:
            out["class_names"] = list(self.class_names)
        return out

    @staticmethod
    def from_dict(d: dict) -> "Dataset":
        return Dataset(
            graphs=tuple(Graph.from_dict(g) for g in d["graphs"]),
            task=Task(d["task"]),
            num_classes=d["num_classes"],
            train_mask=np.asarray(d["train_mask"], dtype=bool),
            seed=d["seed"],
            name=d.get("name"),
            class_names=tuple(d["class_names"]) if "class_names" in d else None,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @staticmethod
    def loads(text: str) -> "Dataset":
        return Dataset.from_dict(json.loads(text))


def make_split(num_units: int, seed: int) -> np.ndarray:
    """Seeded 80:20 train/test membership over units."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(num_units)
    n_train = int(round(TRAIN_FRACTION * num_units))
    mask = np.zeros(num_units, dtype=bool)
    mask[order[:n_train]] = True
    return mask


@dataclass(frozen=True)
class Subgraph:
    """An induced subgraph with anchor (clustered) nodes marked.

    ``parent_node_ids`` keeps the original ids so explanations can display
    them; ``edges`` are re-indexed to local ids 0..len-1.
    """

    parent_node_ids: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    anchor_ids: frozenset
    hop_radius: int
    node_tags: Optional[tuple[int, ...]] = None
    node_labels: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if not self.anchor_ids:
            raise InputError("anchor_ids must be nonempty")
        n = len(self.parent_node_ids)
        for a in self.anchor_ids:
            if not (0 <= a < n):
                raise InputError("anchor id out of range")

    @property
    def num_nodes(self) -> int:
        return len(self.parent_node_ids)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[frozenset, ...]:
        adj = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def to_dict(self) -> dict:
        out = {
            "parent_node_ids": list(self.parent_node_ids),
            "edges": [[u, v] for u, v in self.edges],
            "anchor_ids": sorted(self.anchor_ids),
            "hop_radius": self.hop_radius,
        }
        if self.node_tags is not None:
            out["node_tags"] = list(self.node_tags)
        if self.node_labels is not None:
            out["node_labels"] = list(self.node_labels)
        return out

    @staticmethod
    def from_dict(d: dict) -> "Subgraph":
        return Subgraph(
            parent_node_ids=tuple(d["parent_node_ids"]),
            edges=tuple((int(u), int(v)) for u, v in d["edges"]),
            anchor_ids=frozenset(d["anchor_ids"]),
            hop_radius=int(d["hop_radius"]),
            node_tags=tuple(d["node_tags"]) if "node_tags" in d else None,
            node_labels=tuple(d["node_labels"]) if "node_labels" in d else None,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def subgraph_from_parent(g: Graph, node_ids: Sequence[int], anchors: Iterable[int], hop_radius: int) -> Subgraph:
    """Induce a subgraph of g on ``node_ids`` (parent ids) with given parent-id anchors."""
    ids = tuple(node_ids)
    local = {p: i for i, p in enumerate(ids)}
    edges = []
    for u, v in g.edges:
        if u in local and v in local:
            a, b = local[u], local[v]
            edges.append((a, b) if a < b else (b, a))
    tags = None if g.node_tags is None else tuple(int(g.node_tags[p]) for p in ids)
    labels = None if g.node_labels is None else tuple(int(g.node_labels[p]) for p in ids)
    return Subgraph(
        parent_node_ids=ids,
        edges=tuple(sorted(edges)),
        anchor_ids=frozenset(local[a] for a in anchors),
        hop_radius=hop_radius,
        node_tags=tags,
        node_labels=labels,
    )


def n_hop_neighborhood(g: Graph, node: int, n: int) -> Subgraph:
    """Induced subgraph on every node within shortest-path distance n of ``node``."""
    if not (0 <= node < g.num_nodes):
        raise InputError(f"node {node} out of range")
    if n < 0:
        raise InputError("hop count must be >= 0")
    dist = {node: 0}
    queue = deque([node])
    while queue:
        u = queue.popleft()
        if dist[u] == n:
            continue
        for v in g.adjacency[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    members = sorted(dist)
    return subgraph_from_parent(g, members, [node], n)


def disjoint_union(g1: Graph, g2: Graph) -> Graph:
    """Concatenate two graphs, offsetting g2's node ids by g1.num_nodes."""
    if g1.num_nodes == 0:
        return g2
    if g2.num_nodes == 0:
        return g1
    if g1.feature_dim != g2.feature_dim:
        raise InputError("feature dimensions must match (or both be zero-width)")
    off = g1.num_nodes
    edges = list(g1.edges) + [(u + off, v + off) for u, v in g2.edges]

    def _concat(a, b, what):
        if (a is None) != (b is None):
            raise InputError(f"cannot union: {what} present on only one graph")
        if a is None:
            return None
        return np.concatenate([a, b])

    return Graph(
        num_nodes=g1.num_nodes + g2.num_nodes,
        edges=tuple(sorted(edges)),
        node_features=np.vstack([g1.node_features, g2.node_features]),
        node_labels=_concat(g1.node_labels, g2.node_labels, "node_labels"),
        node_tags=_concat(g1.node_tags, g2.node_tags, "node_tags"),
        graph_label=None,
    )


def add_random_edges(g: Graph, count: int, rng_seed: int) -> Graph:
    """Add ``count`` distinct absent edges, uniformly sampled, deterministic per seed."""
    if count < 0:
        raise InputError("count must be >= 0")
    absent = g.num_nodes * (g.num_nodes - 1) // 2 - g.num_edges
    if count > absent:
        raise InputError(f"requested {count} new edges but only {absent} node pairs are absent")
    rng = np.random.default_rng(rng_seed)
    present = set(g.edges)
    new_edges = set()
    while len(new_edges) < count:
        u = int(rng.integers(g.num_nodes))
        v = int(rng.integers(g.num_nodes))
        if u == v:
            continue
        e = (u, v) if u < v else (v, u)
        if e in present or e in new_edges:
            continue
        new_edges.add(e)
    return Graph(
        num_nodes=g.num_nodes,
        edges=tuple(sorted(present | new_edges)),
        node_features=g.node_features,
        node_labels=g.node_labels,
        node_tags=g.node_tags,
        graph_label=g.graph_label,
    )


def is_isomorphic(s1: Subgraph, s2: Subgraph, respect_anchors: bool = False, respect_tags: bool = False) -> bool:
    """Exact isomorphism test by backtracking with degree pruning (<= 16 nodes)."""
    if s1.num_nodes > ISO_NODE_BOUND or s2.num_nodes > ISO_NODE_BOUND:
        raise CapacityError(f"isomorphism bound is {ISO_NODE_BOUND} nodes")
    if s1.num_nodes != s2.num_nodes or s1.num_edges != s2.num_edges:
        return False
    n = s1.num_nodes
    deg1 = [s1.degree(i) for i in range(n)]
    deg2 = [s2.degree(i) for i in range(n)]
    if sorted(deg1) != sorted(deg2):
        return False
    anch1 = s1.anchor_ids
    anch2 = s2.anchor_ids
    if respect_anchors and len(anch1) != len(anch2):
        return False
    tags1 = s1.node_tags
    tags2 = s2.node_tags
    if respect_tags:
        t1 = tuple(0 for _ in range(n)) if tags1 is None else tags1
        t2 = tuple(0 for _ in range(n)) if tags2 is None else tags2
        if sorted(t1) != sorted(t2):
            return False
        tags1, tags2 = t1, t2

    # Match nodes of s1 in descending-degree order; prune by degree/anchor/tag.
    order = sorted(range(n), key=lambda i: -deg1[i])
    mapping = [-1] * n  # s1 local id -> s2 local id
    used = [False] * n

    def compatible(a: int, b: int) -> bool:
        if deg1[a] != deg2[b]:
            return False
        if respect_anchors and ((a in anch1) != (b in anch2)):
            return False
        if respect_tags and tags1[a] != tags2[b]:
            return False
        for u in s1.adjacency[a]:
            m = mapping[u]
            if m >= 0 and m not in s2.adjacency[b]:
                return False
        # adjacency must be preserved both ways among already-mapped nodes
        mapped_neighbors = sum(1 for u in s1.adjacency[a] if mapping[u] >= 0)
        mapped_image_neighbors = sum(1 for v in s2.adjacency[b] if used[v])
        return mapped_neighbors == mapped_image_neighbors

    def backtrack(idx: int) -> bool:
        if idx == n:
            return True
        a = order[idx]
        for b in range(n):
            if used[b] or not compatible(a, b):
                continue
            mapping[a] = b
            used[b] = True
            if backtrack(idx + 1):
                return True
            mapping[a] = -1
            used[b] = False
        return False

    return backtrack(0)
