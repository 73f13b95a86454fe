"""Exact graph edit distance between small subgraphs.

The distance is the minimum total cost of node insertions/deletions/
substitutions and edge insertions/deletions transforming one graph into the
other. The search is best-first (A*) over partial node mappings with an
admissible lower bound from unmatched node and edge counts, so the first goal
popped is optimal. Anchor roles are ignored: the measure compares structure
(and node tags when enabled), not which node the concept was grown from.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

from .errors import CapacityError
from .graph import Subgraph, is_isomorphic

DEFAULT_NODE_LIMIT = 15
DEFAULT_EXPANSION_BUDGET = 10_000_000
ORACLE_NODE_BOUND = 5


@dataclass(frozen=True)
class PlainGraph:
    """Anchor-free stand-in accepted wherever GED/isomorphism needs a graph.

    Subgraphs require a nonempty anchor set; edit-distance inputs (CLI files,
    oracle fixtures, empty graphs) do not, so this adapter carries just the
    structure.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    node_tags: Optional[tuple] = None
    anchor_ids: frozenset = frozenset()

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self):
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


def plain(num_nodes: int, edges, tags=None) -> PlainGraph:
    norm = {tuple(sorted((int(u), int(v)))) for u, v in edges}
    return PlainGraph(num_nodes, tuple(sorted(norm)), None if tags is None else tuple(tags))


@dataclass(frozen=True)
class EditCostConfig:
    node_insert: float = 1.0
    node_delete: float = 1.0
    node_substitute: float = 1.0  # charged only when tags differ
    edge_insert: float = 1.0
    edge_delete: float = 1.0
    respect_tags: bool = False

    def __post_init__(self):
        for name in ("node_insert", "node_delete", "node_substitute", "edge_insert", "edge_delete"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class GedResult:
    distance: Optional[float]
    exceeded: bool = False
    reason: Optional[str] = None
    node_mapping: Optional[tuple] = None  # g1 local id -> g2 local id or None (deleted)

    def require(self) -> float:
        if self.exceeded:
            raise CapacityError(self.reason or "graph edit distance exceeded its limits")
        return self.distance


class _G:
    """Minimal adjacency view shared by the search and the oracle."""

    __slots__ = ("n", "adj", "edges", "tags")

    def __init__(self, n: int, edges: Sequence[tuple], tags):
        self.n = n
        self.edges = [tuple(e) for e in edges]
        self.adj = [set() for _ in range(n)]
        for u, v in self.edges:
            self.adj[u].add(v)
            self.adj[v].add(u)
        self.tags = list(tags) if tags is not None else [None] * n


def _as_g(s: Subgraph, respect_tags: bool) -> _G:
    return _G(s.num_nodes, s.edges, s.node_tags if respect_tags else None)


def _subst_cost(costs: EditCostConfig, t1, t2) -> float:
    if costs.respect_tags and t1 != t2:
        return costs.node_substitute
    return 0.0


def graph_edit_distance(
    g1: Subgraph,
    g2: Subgraph,
    costs: EditCostConfig = EditCostConfig(),
    node_limit: int = DEFAULT_NODE_LIMIT,
    expansion_budget: int = DEFAULT_EXPANSION_BUDGET,
) -> GedResult:
    """Exact minimum-cost edit distance, or an Exceeded result past the limits."""
    if g1.num_nodes > node_limit or g2.num_nodes > node_limit:
        return GedResult(
            distance=None, exceeded=True,
            reason=f"graph exceeds node limit {node_limit}",
        )
    a = _as_g(g1, costs.respect_tags)
    b = _as_g(g2, costs.respect_tags)

    # Fast path: isomorphic graphs are at distance 0 under any cost config.
    if (
        a.n == b.n
        and a.n <= 16  # exact backtracking bound
        and len(a.edges) == len(b.edges)
        and is_isomorphic(g1, g2, respect_anchors=False, respect_tags=costs.respect_tags)
    ):
        return GedResult(distance=0.0, node_mapping=None)

    # Process g1 nodes by descending degree: dense nodes constrain the search most.
    order = sorted(range(a.n), key=lambda i: (-len(a.adj[i]), i))

    def lower_bound(r1: int, r2: int, e1r: int, e2r: int) -> float:
        nodes = (r1 - r2) * costs.node_delete if r1 >= r2 else (r2 - r1) * costs.node_insert
        pairable = min(e1r, e2r)
        return nodes + (e1r - pairable) * costs.edge_delete + (e2r - pairable) * costs.edge_insert

    # State: (f, tiebreak, g_cost, idx, mapping, e1r, e2r)
    start_h = lower_bound(a.n, b.n, len(a.edges), len(b.edges))
    counter = itertools.count()
    heap = [(start_h, next(counter), 0.0, 0, (), len(a.edges), len(b.edges))]
    expansions = 0

    while heap:
        f, _, g_cost, idx, mapping, e1r, e2r = heapq.heappop(heap)
        if idx == a.n:
            full = [None] * a.n
            for pos, img in enumerate(mapping):
                full[order[pos]] = img
            return GedResult(distance=f, node_mapping=tuple(full))
        expansions += 1
        if expansions > expansion_budget:
            return GedResult(
                distance=None, exceeded=True,
                reason=f"search expansion budget {expansion_budget} exhausted",
            )

        node = order[idx]
        used = set(m for m in mapping if m is not None)
        prev = order[:idx]
        n_prev_adj = sum(1 for p in prev if p in a.adj[node])

        # Branch 1: substitute `node` by each unused g2 node.
        for cand in range(b.n):
            if cand in used:
                continue
            delta = _subst_cost(costs, a.tags[node], b.tags[cand])
            cand_used_adj = sum(1 for v in b.adj[cand] if v in used)
            matched = 0
            for pos, p in enumerate(prev):
                img = mapping[pos]
                if img is None:
                    if p in a.adj[node]:
                        delta += costs.edge_delete
                else:
                    e1 = p in a.adj[node]
                    e2 = img in b.adj[cand]
                    if e1 and e2:
                        matched += 1
                    elif e1:
                        delta += costs.edge_delete
                    elif e2:
                        delta += costs.edge_insert
            child_e1r = e1r - n_prev_adj
            child_e2r = e2r - cand_used_adj
            child_g = g_cost + delta
            child_h = lower_bound(a.n - idx - 1, b.n - len(used) - 1, child_e1r, child_e2r)
            heapq.heappush(
                heap,
                (child_g + child_h, next(counter), child_g, idx + 1,
                 mapping + (cand,), child_e1r, child_e2r),
            )

        # Branch 2: delete `node` (all its edges to processed nodes go too).
        delta = costs.node_delete + n_prev_adj * costs.edge_delete
        child_e1r = e1r - n_prev_adj
        child_g = g_cost + delta
        child_h = lower_bound(a.n - idx - 1, b.n - len(used), child_e1r, e2r)
        heapq.heappush(
            heap,
            (child_g + child_h, next(counter), child_g, idx + 1,
             mapping + (None,), child_e1r, e2r),
        )

    raise AssertionError("search heap exhausted without reaching a goal")


def ged_bruteforce_oracle(g1: Subgraph, g2: Subgraph, costs: EditCostConfig = EditCostConfig()) -> float:
    """Exhaustive minimum over every injective partial mapping; exact by construction."""
    if g1.num_nodes > ORACLE_NODE_BOUND or g2.num_nodes > ORACLE_NODE_BOUND:
        raise CapacityError(f"oracle bound is {ORACLE_NODE_BOUND} nodes")
    a = _as_g(g1, costs.respect_tags)
    b = _as_g(g2, costs.respect_tags)
    nodes1 = range(a.n)
    nodes2 = range(b.n)
    best = None
    for k in range(min(a.n, b.n) + 1):
        for kept in itertools.combinations(nodes1, k):
            for images in itertools.permutations(nodes2, k):
                phi = dict(zip(kept, images))
                cost = (a.n - k) * costs.node_delete + (b.n - k) * costs.node_insert
                for u, img in phi.items():
                    cost += _subst_cost(costs, a.tags[u], b.tags[img])
                covered = set(images)
                for u, v in a.edges:
                    if u in phi and v in phi:
                        if phi[v] not in b.adj[phi[u]]:
                            cost += costs.edge_delete
                    else:
                        cost += costs.edge_delete
                for u, v in b.edges:
                    if u in covered and v in covered:
                        continue  # matched or charged as insert via the pair check below
                    cost += costs.edge_insert
                # g2 edges between covered nodes whose preimages are not adjacent
                inv = {img: u for u, img in phi.items()}
                for u, v in b.edges:
                    if u in covered and v in covered and inv[v] not in a.adj[inv[u]]:
                        cost += costs.edge_insert
                if best is None or cost < best:
                    best = cost
    return best
