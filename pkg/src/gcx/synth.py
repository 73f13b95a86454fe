"""Deterministic construction of the five synthetic node-classification benchmarks.

Each dataset plants copies of a ground-truth motif (house, 3x3 grid, or cycle)
on a base graph (preferential-attachment graph or balanced binary tree), adds
random edges, and labels nodes by their structural role.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError
from .graph import Dataset, Graph, Task, add_random_edges, disjoint_union, make_split

# Base-graph conventions; the source papers leave these unstated.
BA_ATTACH_M = 5
CYCLE_SIZE = 6
DEFAULT_MOTIF_COUNT = 80
RANDOM_EDGE_FRACTION = 0.1  # of base-graph nodes, where no explicit count applies
COMMUNITY_FEATURE_NOISE = 0.3

DATASET_NAMES = ("ba_shapes", "ba_community", "ba_grid", "tree_cycles", "tree_grid")


@dataclass(frozen=True)
class Motif:
    """A canonical planted structure: local edges, role labels, and the node
    that carries the single attachment edge to the base graph."""

    kind: str
    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    roles: tuple[int, ...]  # role offsets, 0-based within the motif's label block
    attachment_node: int


# House: floor 2-3, walls 3-0 and 2-1, ceiling 0-1, roof node 4 on the ceiling.
# Roles (offsets): top=0, middle=1, bottom=2. The attachment edge leaves a
# middle node so that the whole house plus that edge fits in a 2-hop view of
# the top node.
HOUSE_TOP, HOUSE_MIDDLE, HOUSE_BOTTOM = 0, 1, 2


def house_motif() -> Motif:
    return Motif(
        kind="house",
        num_nodes=5,
        edges=((0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (1, 4)),
        roles=(HOUSE_MIDDLE, HOUSE_MIDDLE, HOUSE_BOTTOM, HOUSE_BOTTOM, HOUSE_TOP),
        attachment_node=0,
    )


def grid_motif() -> Motif:
    edges = []
    for r in range(3):
        for c in range(3):
            i = 3 * r + c
            if c < 2:
                edges.append((i, i + 1))
            if r < 2:
                edges.append((i, i + 3))
    return Motif(
        kind="grid3x3",
        num_nodes=9,
        edges=tuple(sorted(edges)),
        roles=(0,) * 9,
        attachment_node=0,
    )


def cycle_motif(size: int = CYCLE_SIZE) -> Motif:
    if size < 3:
        raise InputError("cycle size must be >= 3")
    edges = tuple(sorted((i, (i + 1) % size) if i < (i + 1) % size else ((i + 1) % size, i) for i in range(size)))
    return Motif(kind="cycle", num_nodes=size, edges=edges, roles=(0,) * size, attachment_node=0)


def make_motif(kind: str, cycle_size: int = CYCLE_SIZE) -> Motif:
    if kind == "house":
        return house_motif()
    if kind == "grid3x3":
        return grid_motif()
    if kind == "cycle":
        return cycle_motif(cycle_size)
    raise InputError(f"unknown motif kind {kind!r}")


def motif_as_graph(motif: Motif) -> Graph:
    return Graph.build(motif.num_nodes, motif.edges)


def generate_ba(num_nodes: int, attach_m: int, seed: int) -> Graph:
    """Preferential-attachment graph: an initial clique of attach_m nodes, then
    each new node links to attach_m distinct existing nodes chosen with
    probability proportional to degree."""
    if not (num_nodes > attach_m >= 1):
        raise InputError("require num_nodes > attach_m >= 1")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(attach_m) for j in range(i + 1, attach_m)]
    degree = np.zeros(num_nodes, dtype=np.float64)
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    for t in range(attach_m, num_nodes):
        weights = degree[:t].copy()
        targets = []
        for _ in range(attach_m):
            total = weights.sum()
            if total <= 0:
                # degree-0 prefix (attach_m == 1 bootstrap): uniform over unpicked
                remaining = np.asarray([i for i in range(t) if i not in targets])
                pick = int(remaining[rng.integers(len(remaining))])
            else:
                pick = int(rng.choice(t, p=weights / total))
            targets.append(pick)
            weights[pick] = 0.0  # without replacement
        for v in targets:
            edges.append((v, t))
            degree[v] += 1
            degree[t] += 1
    return Graph.build(num_nodes, edges)


def generate_tree(depth: int) -> Graph:
    """Complete binary tree with the root at depth 0; 2^(depth+1)-1 nodes."""
    if depth < 1:
        raise InputError("depth must be >= 1")
    n = 2 ** (depth + 1) - 1
    edges = []
    for child in range(1, n):
        edges.append(((child - 1) // 2, child))
    return Graph.build(n, edges)


def attach_motifs(
    base: Graph, motif: Motif, count: int, seed: int, role_offset: int = 1
) -> tuple[Graph, np.ndarray, list[tuple[int, ...]]]:
    """Plant ``count`` motif copies, each joined to a uniformly chosen base node
    by one edge from the motif's attachment node.

    Returns the enlarged graph, per-node role labels (base nodes get 0, motif
    roles are shifted by ``role_offset``), and the planted instances' node ids.
    """
    if count < 1:
        raise InputError("motif count must be >= 1")
    rng = np.random.default_rng(seed)
    edges = list(base.edges)
    labels = [0] * base.num_nodes
    instances = []
    next_id = base.num_nodes
    for _ in range(count):
        host = int(rng.integers(base.num_nodes))
        ids = tuple(range(next_id, next_id + motif.num_nodes))
        for u, v in motif.edges:
            edges.append((ids[u], ids[v]))
        edges.append((host, ids[motif.attachment_node]))
        labels.extend(role_offset + r for r in motif.roles)
        instances.append(ids)
        next_id += motif.num_nodes
    g = Graph.build(next_id, edges, node_labels=labels)
    return g, np.asarray(labels, dtype=np.int64), instances


def _constant_features(g: Graph) -> Graph:
    feats = np.ones((g.num_nodes, 1), dtype=np.float64)
    return Graph(
        num_nodes=g.num_nodes,
        edges=g.edges,
        node_features=feats,
        node_labels=g.node_labels,
        node_tags=g.node_tags,
        graph_label=g.graph_label,
    )


def _ba_shapes_graph(seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    s_base, s_attach, s_edges = (int(x) for x in rng.integers(2**31 - 1, size=3))
    base = generate_ba(300, BA_ATTACH_M, s_base)
    g, _, _ = attach_motifs(base, house_motif(), DEFAULT_MOTIF_COUNT, s_attach)
    return add_random_edges(g, 70, s_edges)


def _single_graph_dataset(name, g, num_classes, seed, class_names) -> Dataset:
    return Dataset(
        graphs=(g,),
        task=Task.NODE,
        num_classes=num_classes,
        train_mask=make_split(g.num_nodes, seed),
        seed=seed,
        name=name,
        class_names=class_names,
    )


def build_dataset(name: str, seed: int, community_bridges: int = 0) -> Dataset:
    """Construct one of the five synthetic benchmarks, bit-reproducibly."""
    rng = np.random.default_rng(seed)
    if name == "ba_shapes":
        g = _constant_features(_ba_shapes_graph(seed))
        return _single_graph_dataset(name, g, 4, seed, ("base", "top", "middle", "bottom"))

    if name == "ba_community":
        s0, s1, s_bridge, s_feat = (int(x) for x in rng.integers(2**31 - 1, size=4))
        g0 = _ba_shapes_graph(s0)
        g1 = _ba_shapes_graph(s1)
        labels = np.concatenate([g0.node_labels, g1.node_labels + 4])
        g = disjoint_union(g0, g1)
        # Community indicator on the community's half of the dims, plus
        # additive noise small enough that the signal survives neighborhood
        # averaging (zero-mean noise alone is not learnable).
        feat_rng = np.random.default_rng(s_feat)
        feats = np.zeros((g.num_nodes, 8), dtype=np.float64)
        noise = COMMUNITY_FEATURE_NOISE
        feats[: g0.num_nodes, :4] = 1.0 + noise * feat_rng.standard_normal((g0.num_nodes, 4))
        feats[g0.num_nodes :, 4:] = 1.0 + noise * feat_rng.standard_normal((g1.num_nodes, 4))
        g = Graph(
            num_nodes=g.num_nodes, edges=g.edges, node_features=feats,
            node_labels=labels, node_tags=None, graph_label=None,
        )
        if community_bridges:
            g = _add_bridges(g, g0.num_nodes, community_bridges, s_bridge)
        names = tuple(f"c{c}_{r}" for c in (0, 1) for r in ("base", "top", "middle", "bottom"))
        return _single_graph_dataset(name, g, 8, seed, names)

    if name == "ba_grid":
        s_base, s_attach, s_edges = (int(x) for x in rng.integers(2**31 - 1, size=3))
        base = generate_ba(300, BA_ATTACH_M, s_base)
        g, _, _ = attach_motifs(base, grid_motif(), DEFAULT_MOTIF_COUNT, s_attach)
        g = add_random_edges(g, int(RANDOM_EDGE_FRACTION * base.num_nodes), s_edges)
        g = _constant_features(g)
        return _single_graph_dataset(name, g, 2, seed, ("base", "grid"))

    if name in ("tree_cycles", "tree_grid"):
        s_attach, s_edges = (int(x) for x in rng.integers(2**31 - 1, size=2))
        base = generate_tree(8)
        motif = cycle_motif() if name == "tree_cycles" else grid_motif()
        g, _, _ = attach_motifs(base, motif, DEFAULT_MOTIF_COUNT, s_attach)
        g = add_random_edges(g, int(RANDOM_EDGE_FRACTION * base.num_nodes), s_edges)
        g = _constant_features(g)
        member = "cycle" if name == "tree_cycles" else "grid"
        return _single_graph_dataset(name, g, 2, seed, ("tree", member))

    raise InputError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")


def _add_bridges(g: Graph, boundary: int, count: int, seed: int) -> Graph:
    """Add ``count`` random edges that cross the community boundary."""
    rng = np.random.default_rng(seed)
    present = set(g.edges)
    new_edges = set()
    n_right = g.num_nodes - boundary
    if count > boundary * n_right:
        raise InputError("more bridges requested than cross pairs exist")
    while len(new_edges) < count:
        u = int(rng.integers(boundary))
        v = boundary + int(rng.integers(n_right))
        if (u, v) in present or (u, v) in new_edges:
            continue
        new_edges.add((u, v))
    return Graph(
        num_nodes=g.num_nodes,
        edges=tuple(sorted(present | new_edges)),
        node_features=g.node_features,
        node_labels=g.node_labels,
        node_tags=g.node_tags,
        graph_label=g.graph_label,
    )
