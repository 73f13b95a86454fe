import itertools

import numpy as np
import pytest

from gcx.errors import CapacityError
from gcx.ged import (
    EditCostConfig,
    ged_bruteforce_oracle,
    graph_edit_distance,
    plain,
)
from gcx.graph import is_isomorphic
from gcx.synth import house_motif

UNIT = EditCostConfig()


def triangle():
    return plain(3, [(0, 1), (1, 2), (0, 2)])


def path3():
    return plain(3, [(0, 1), (1, 2)])


def house():
    return plain(5, house_motif().edges)


class TestOracle:
    def test_identity(self):
        assert ged_bruteforce_oracle(triangle(), triangle()) == 0.0

    def test_empty_vs_triangle_cost_terms(self):
        costs = EditCostConfig(node_insert=2.0, edge_insert=3.0)
        empty = plain(0, [])
        assert ged_bruteforce_oracle(empty, triangle(), costs) == 3 * 2.0 + 3 * 3.0

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            g1 = _random_plain(rng, int(rng.integers(0, 5)))
            g2 = _random_plain(rng, int(rng.integers(0, 5)))
            assert ged_bruteforce_oracle(g1, g2) == ged_bruteforce_oracle(g2, g1)

    def test_size_bound(self):
        big = plain(6, [])
        with pytest.raises(CapacityError):
            ged_bruteforce_oracle(big, triangle())


def _random_plain(rng, n, p=0.5, tags=None):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return plain(n, edges, tags)


class TestSearch:
    def test_identity_zero(self):
        assert graph_edit_distance(house(), house()).distance == 0.0

    def test_triangle_vs_path(self):
        # Oracle first: deleting one edge is the single cheapest edit set.
        assert ged_bruteforce_oracle(triangle(), path3()) == 1.0
        assert graph_edit_distance(triangle(), path3()).distance == 1.0

    def test_house_vs_house_plus_edge(self):
        h = house()
        extra = plain(5, list(house_motif().edges) + [(2, 4)])
        assert ged_bruteforce_oracle(h, extra) == 1.0
        assert graph_edit_distance(h, extra).distance == 1.0

    def test_node_limit_exceeded(self):
        line = plain(16, [(i, i + 1) for i in range(15)])
        result = graph_edit_distance(line, triangle(), node_limit=15)
        assert result.exceeded
        assert result.distance is None

    def test_expansion_budget_exceeded(self):
        rng = np.random.default_rng(5)
        g1 = _random_plain(rng, 9, 0.5)
        g2 = _random_plain(rng, 9, 0.5)
        result = graph_edit_distance(g1, g2, expansion_budget=3)
        assert result.exceeded

    def test_tag_substitution(self):
        a = plain(1, [], tags=[1])
        b = plain(1, [], tags=[2])
        tagged = EditCostConfig(respect_tags=True)
        assert graph_edit_distance(a, b, tagged).distance == 1.0
        assert graph_edit_distance(a, b, UNIT).distance == 0.0
        cheap_swap = EditCostConfig(respect_tags=True, node_substitute=5.0)
        # delete + insert (2.0) beats the expensive substitution
        assert graph_edit_distance(a, b, cheap_swap).distance == 2.0

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            g1 = _random_plain(rng, int(rng.integers(0, 6)))
            g2 = _random_plain(rng, int(rng.integers(0, 6)))
            if max(g1.num_nodes, g2.num_nodes) > 5:
                continue
            expected = ged_bruteforce_oracle(g1, g2)
            assert graph_edit_distance(g1, g2).distance == expected

    def test_matches_oracle_with_tags(self):
        rng = np.random.default_rng(23)
        tagged = EditCostConfig(respect_tags=True)
        for _ in range(25):
            n1, n2 = int(rng.integers(0, 5)), int(rng.integers(0, 5))
            g1 = _random_plain(rng, n1, tags=rng.integers(0, 2, size=n1).tolist())
            g2 = _random_plain(rng, n2, tags=rng.integers(0, 2, size=n2).tolist())
            assert graph_edit_distance(g1, g2, tagged).distance == ged_bruteforce_oracle(g1, g2, tagged)

    def test_cost_scaling(self):
        rng = np.random.default_rng(2)
        lam = 2.5
        scaled = EditCostConfig(
            node_insert=lam, node_delete=lam, node_substitute=lam,
            edge_insert=lam, edge_delete=lam,
        )
        for _ in range(15):
            g1 = _random_plain(rng, int(rng.integers(1, 5)))
            g2 = _random_plain(rng, int(rng.integers(1, 5)))
            base = graph_edit_distance(g1, g2, UNIT).distance
            assert graph_edit_distance(g1, g2, scaled).distance == pytest.approx(lam * base)

    def test_zero_iff_isomorphic(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            n = int(rng.integers(1, 5))
            g1 = _random_plain(rng, n)
            g2 = _random_plain(rng, n)
            d = graph_edit_distance(g1, g2).distance
            assert (d == 0.0) == is_isomorphic(g1, g2)

    def test_mapping_is_reported(self):
        result = graph_edit_distance(triangle(), path3())
        assert result.node_mapping is not None
        assert len(result.node_mapping) == 3
