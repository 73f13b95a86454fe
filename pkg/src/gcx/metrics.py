"""Concept quality metrics: purity, completeness, and heuristic recovery.

Purity is the mean pairwise exact edit distance among a concept's strongest
representations (0 means structurally identical). Completeness is the held-out
accuracy of a decision tree predicting class labels from concept assignments
alone. Heuristic recovery counts how many of the eight canonical anchored
house patterns appear verbatim among the discovered concepts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .concepts import (
    ConceptModel,
    RepresentationQuery,
    concept_contribution,
    concept_members,
    top_representations,
)
from .errors import EmptyReportError, InputError
from .ged import EditCostConfig, graph_edit_distance
from .graph import Dataset, Subgraph, Task, is_isomorphic
from .synth import house_motif

NOISE = -1
PURITY_TOP_M = 3
PURITY_NODE_LIMIT = 15


@dataclass(frozen=True)
class Skipped:
    reason: str


@dataclass(frozen=True)
class PurityReport:
    per_concept: dict[int, Union[float, Skipped]]
    minimum: float
    maximum: float
    average: float
    n: int
    top_m: int

    def to_dict(self) -> dict:
        per = {}
        for c, v in self.per_concept.items():
            per[str(c)] = {"skipped": v.reason} if isinstance(v, Skipped) else float(v)
        return {
            "per_concept": per,
            "min": self.minimum,
            "max": self.maximum,
            "avg": self.average,
            "n": self.n,
            "top_m": self.top_m,
        }


@dataclass(frozen=True)
class CompletenessReport:
    score: float
    tree_depth: int
    tree_leaves: int
    split_seed: int
    excluded_noise: int = 0

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "tree_depth": self.tree_depth,
            "tree_leaves": self.tree_leaves,
            "split_seed": self.split_seed,
            "excluded_noise": self.excluded_noise,
        }


# ---------------------------------------------------------------------------
# CART decision tree (Gini impurity, no depth limit, minimum leaf size 1)
# ---------------------------------------------------------------------------


@dataclass
class _Node:
    prediction: int
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def _majority(y: np.ndarray, num_classes: int) -> int:
    counts = np.bincount(y, minlength=num_classes)
    return int(np.argmax(counts))  # ties resolve toward the lower class id


@dataclass(frozen=True)
class DecisionTree:
    root: _Node
    num_classes: int
    depth: int
    leaf_count: int

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.empty(len(x), dtype=np.int64)
        for i, row in enumerate(x):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.prediction
        return out


def fit_cart(x: np.ndarray, y: np.ndarray, num_classes: int) -> DecisionTree:
    """Binary CART on continuous features; deterministic tie-breaks toward the
    lower feature index and threshold."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise InputError("empty training set")
    stats = {"depth": 0, "leaves": 0}

    def build(idx: np.ndarray, depth: int) -> _Node:
        ys = y[idx]
        counts = np.bincount(ys, minlength=num_classes)
        node = _Node(prediction=int(np.argmax(counts)))
        parent_gini = _gini(counts)
        if parent_gini == 0.0:
            stats["leaves"] += 1
            stats["depth"] = max(stats["depth"], depth)
            return node
        best = None  # (gain, feature, threshold, left_mask)
        n = len(idx)
        for f in range(x.shape[1]):
            col = x[idx, f]
            order = np.argsort(col, kind="stable")
            sorted_col = col[order]
            sorted_y = ys[order]
            left_counts = np.zeros(num_classes, dtype=np.int64)
            right_counts = counts.copy()
            for pos in range(n - 1):
                cls = sorted_y[pos]
                left_counts[cls] += 1
                right_counts[cls] -= 1
                if sorted_col[pos] == sorted_col[pos + 1]:
                    continue
                thr = (sorted_col[pos] + sorted_col[pos + 1]) / 2.0
                child = ((pos + 1) * _gini(left_counts) + (n - pos - 1) * _gini(right_counts)) / n
                gain = parent_gini - child
                if gain > 1e-12 and (best is None or gain > best[0]):
                    best = (gain, f, thr)
        if best is None:
            stats["leaves"] += 1
            stats["depth"] = max(stats["depth"], depth)
            return node
        _, f, thr = best
        mask = x[idx, f] <= thr
        node.feature = f
        node.threshold = thr
        node.left = build(idx[mask], depth + 1)
        node.right = build(idx[~mask], depth + 1)
        return node

    root = build(np.arange(len(x)), 0)
    return DecisionTree(root=root, num_classes=num_classes, depth=stats["depth"], leaf_count=stats["leaves"])


def one_hot_concepts(assignments: np.ndarray, k: int) -> np.ndarray:
    """Concept-id indicator matrix; NOISE rows are all-zero."""
    out = np.zeros((len(assignments), k), dtype=np.float64)
    for i, c in enumerate(assignments):
        if c != NOISE:
            out[i, c] = 1.0
    return out


def train_decision_tree(inputs: np.ndarray, labels: np.ndarray, train_mask: np.ndarray,
                        num_classes: Optional[int] = None) -> DecisionTree:
    """CART over one-hot concept indicators; NOISE units are left out."""
    inputs = np.asarray(inputs, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    keep = train_mask & (inputs != NOISE)
    if not keep.any():
        raise InputError("no usable training examples")
    k = int(inputs[inputs != NOISE].max()) + 1 if (inputs != NOISE).any() else 0
    x = one_hot_concepts(inputs, k)
    classes = num_classes if num_classes is not None else int(labels.max()) + 1
    return fit_cart(x[keep], labels[keep], classes)


def majority_class_predictor(inputs: np.ndarray, labels: np.ndarray, train_mask: np.ndarray,
                             num_classes: int) -> dict[int, int]:
    """Per-concept majority vote on the training split; the independent
    cross-check for the degenerate single-categorical-feature CART."""
    table: dict[int, np.ndarray] = {}
    for c, y in zip(inputs[train_mask], labels[train_mask]):
        if c == NOISE:
            continue
        table.setdefault(int(c), np.zeros(num_classes, dtype=np.int64))[y] += 1
    return {c: int(np.argmax(v)) for c, v in table.items()}


def graph_concept_features(model: ConceptModel) -> np.ndarray:
    """Per-graph normalized concept histograms (graph-task completeness input)."""
    ds = model.dataset
    k = model.n_concepts
    out = np.zeros((len(ds.graphs), k), dtype=np.float64)
    for gi, g in enumerate(ds.graphs):
        hist = concept_contribution(model, gi)
        for c, count in hist.items():
            if c != NOISE:
                out[gi, c] = count / g.num_nodes
    return out


def concept_completeness(model: ConceptModel, dataset: Dataset) -> CompletenessReport:
    """Held-out accuracy of a decision tree mapping concepts to class labels."""
    if dataset.task is Task.NODE:
        inputs = model.assignments
        labels = dataset.unit_labels
        usable = inputs != NOISE
        excluded = int((~usable).sum())
        train = dataset.train_mask & usable
        test = dataset.test_mask & usable
        if not train.any() or not test.any():
            raise InputError("split has no usable units after noise exclusion")
        tree = train_decision_tree(inputs, labels, train, num_classes=dataset.num_classes)
        k = int(inputs[usable].max()) + 1
        x = one_hot_concepts(inputs, k)
        preds = tree.predict(x[test])
        score = float((preds == labels[test]).mean())
    else:
        x = graph_concept_features(model)
        labels = dataset.unit_labels
        excluded = 0
        tree = fit_cart(x[dataset.train_mask], labels[dataset.train_mask], dataset.num_classes)
        preds = tree.predict(x[dataset.test_mask])
        score = float((preds == labels[dataset.test_mask]).mean())
    return CompletenessReport(
        score=score,
        tree_depth=tree.depth,
        tree_leaves=tree.leaf_count,
        split_seed=dataset.seed,
        excluded_noise=excluded,
    )


# ---------------------------------------------------------------------------
# Purity
# ---------------------------------------------------------------------------


def _structure_key(s: Subgraph, with_tags: bool):
    tags = s.node_tags if with_tags else None
    return (s.num_nodes, s.edges, tags)


def concept_purity(
    model: ConceptModel,
    dataset: Dataset,
    n: int,
    top_m: int = PURITY_TOP_M,
    node_limit: int = PURITY_NODE_LIMIT,
) -> PurityReport:
    """Mean pairwise edit distance among each concept's top representations.

    Concepts whose representations exceed ``node_limit`` nodes, have fewer than
    two members, or blow the search budget are skipped with a reason.
    """
    if top_m < 2:
        raise InputError("top_m must be >= 2")
    with_tags = dataset.graphs[0].node_tags is not None
    costs = EditCostConfig(respect_tags=with_tags)
    per_concept: dict[int, Union[float, Skipped]] = {}
    cache: dict = {}
    for c in range(model.n_concepts):
        members = concept_members(model, c)
        if len(members) < 2:
            per_concept[c] = Skipped("fewer than 2 members")
            continue
        reps = top_representations(
            model, dataset, RepresentationQuery(concept=c, n=n, top_m=top_m)
        )
        subs = [r.subgraph for r in reps]
        oversize = [s for s in subs if s.num_nodes > node_limit]
        if oversize:
            per_concept[c] = Skipped(f"representation exceeds {node_limit} nodes")
            continue
        dists = []
        exceeded = False
        for i in range(len(subs)):
            for j in range(i + 1, len(subs)):
                key = tuple(sorted((_structure_key(subs[i], with_tags), _structure_key(subs[j], with_tags))))
                if key not in cache:
                    cache[key] = graph_edit_distance(subs[i], subs[j], costs, node_limit=node_limit)
                result = cache[key]
                if result.exceeded:
                    exceeded = True
                    break
                dists.append(result.distance)
            if exceeded:
                break
        if exceeded:
            per_concept[c] = Skipped("edit-distance search budget exceeded")
            continue
        per_concept[c] = float(np.mean(dists))
    scores = [v for v in per_concept.values() if not isinstance(v, Skipped)]
    if not scores:
        raise EmptyReportError("every concept was skipped")
    return PurityReport(
        per_concept=per_concept,
        minimum=float(min(scores)),
        maximum=float(max(scores)),
        average=float(np.mean(scores)),
        n=n,
        top_m=top_m,
    )


# ---------------------------------------------------------------------------
# Heuristic recovery (anchored house patterns)
# ---------------------------------------------------------------------------

HEURISTIC_NAMES = (
    "house_top",
    "house_middle",
    "house_bottom",
    "house_top_edge",
    "house_middle_edge_far",
    "house_middle_edge_close",
    "house_bottom_edge_far",
    "house_bottom_edge_close",
)


def heuristic_templates(n: int = 2) -> dict[str, Subgraph]:
    """The eight canonical anchored house patterns.

    The pendant node models the edge attaching the house to the base graph; it
    hangs off a middle node, so close/far sides are measured from that middle.
    """
    motif = house_motif()
    house_edges = motif.edges
    pendant_edges = house_edges + ((0, 5),)

    def tpl(num_nodes, edges, anchor):
        return Subgraph(
            parent_node_ids=tuple(range(num_nodes)),
            edges=tuple(sorted(edges)),
            anchor_ids=frozenset([anchor]),
            hop_radius=n,
        )

    return {
        "house_top": tpl(5, house_edges, 4),
        "house_middle": tpl(5, house_edges, 0),
        "house_bottom": tpl(5, house_edges, 2),
        "house_top_edge": tpl(6, pendant_edges, 4),
        "house_middle_edge_far": tpl(6, pendant_edges, 1),
        "house_middle_edge_close": tpl(6, pendant_edges, 0),
        "house_bottom_edge_far": tpl(6, pendant_edges, 2),
        "house_bottom_edge_close": tpl(6, pendant_edges, 3),
    }


def heuristic_recovery_count(
    model: ConceptModel, dataset: Dataset, n: int = 2, top_m: int = 3
) -> tuple[int, dict[str, list[int]]]:
    """How many of the eight anchored house patterns some concept recovers.

    A pattern counts as recovered when every one of a concept's ``top_m``
    nearest-centroid representations is isomorphic to it, anchors respected.
    """
    if dataset.name not in ("ba_shapes", "ba_community"):
        raise InputError("heuristic recovery applies to ba_shapes / ba_community only")
    templates = heuristic_templates(n)
    hits: dict[str, list[int]] = {name: [] for name in HEURISTIC_NAMES}
    for c in range(model.n_concepts):
        members = concept_members(model, c)
        if len(members) == 0:
            continue
        reps = top_representations(
            model, dataset, RepresentationQuery(concept=c, n=n, top_m=top_m)
        )
        subs = [r.subgraph for r in reps]
        for name in HEURISTIC_NAMES:
            t = templates[name]
            if all(
                s.num_nodes == t.num_nodes
                and s.num_edges == t.num_edges
                and is_isomorphic(s, t, respect_anchors=True)
                for s in subs
            ):
                hits[name].append(c)
    recovered = sum(1 for name in HEURISTIC_NAMES if hits[name])
    return recovered, hits
