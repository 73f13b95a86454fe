import numpy as np
import pytest

from gcx.concepts import (
    DiscoveryConfig,
    RepresentationQuery,
    assign_concept,
    class_concept_distribution,
    concept_contribution,
    discover_concepts,
    top_representations,
)
from gcx.errors import EmptyConceptError, InputError, UnsupportedLayerError
from gcx.gnn import ActivationTrace, TraceLayer
from gcx.graph import Dataset, Graph, Task, make_split

from conftest import chain_dataset, fake_trace


def graph_dataset():
    graphs = []
    for label, size in [(0, 3), (1, 4), (0, 1)]:
        g = Graph.build(size, [(i, i + 1) for i in range(size - 1)],
                        node_features=np.ones((size, 1)), graph_label=label)
        graphs.append(g)
    return Dataset(tuple(graphs), Task.GRAPH, 2, np.array([True, True, False]), 0)


class TestDiscovery:
    def test_k1_groups_everything(self):
        ds = chain_dataset()
        trace = fake_trace(np.random.default_rng(0).standard_normal((12, 4)))
        model = discover_concepts(trace, 0, DiscoveryConfig("kmeans", k=1, seed=0), ds)
        assert model.n_concepts == 1
        assert set(model.assignments) == {0}

    def test_identical_config_identical_assignments(self):
        ds = chain_dataset()
        pts = np.random.default_rng(1).standard_normal((12, 3))
        trace = fake_trace(pts)
        cfg = DiscoveryConfig("kmeans", k=3, seed=7)
        a = discover_concepts(trace, 0, cfg, ds)
        b = discover_concepts(trace, 0, cfg, ds)
        assert np.array_equal(a.assignments, b.assignments)

    def test_rejects_non_conv_layer(self):
        ds = chain_dataset()
        trace = fake_trace(np.zeros((12, 2)))
        with pytest.raises(UnsupportedLayerError):
            discover_concepts(trace, 1, DiscoveryConfig("kmeans", k=2, seed=0), ds)

    def test_pca_reduction_recorded(self):
        ds = chain_dataset()
        pts = np.random.default_rng(2).standard_normal((12, 6))
        trace = fake_trace(pts)
        model = discover_concepts(trace, 0, DiscoveryConfig("kmeans", k=2, pca_dims=2, seed=0), ds)
        assert model.pca_transform is not None
        assert model.fitted_points.shape == (12, 2)

    def test_config_validation(self):
        with pytest.raises(InputError):
            DiscoveryConfig("kmeans")  # k missing
        with pytest.raises(InputError):
            DiscoveryConfig("dbscan", eps=0.0, min_pts=2)
        with pytest.raises(InputError):
            DiscoveryConfig("spectral", k=2)


class TestAssign:
    def model(self, algorithm="kmeans", **kw):
        ds = chain_dataset()
        pts = np.vstack([np.zeros((6, 2)), np.ones((6, 2)) * 4])
        pts += 0.01 * np.random.default_rng(0).standard_normal(pts.shape)
        trace = fake_trace(pts)
        config = dict(kmeans=DiscoveryConfig("kmeans", k=2, seed=0),
                      ahc=DiscoveryConfig("ahc", k=2, seed=0),
                      dbscan=DiscoveryConfig("dbscan", eps=0.5, min_pts=3, seed=0))[algorithm]
        return discover_concepts(trace, 0, config, ds), pts

    @pytest.mark.parametrize("algorithm", ["kmeans", "ahc", "dbscan"])
    def test_fitted_rows_reproduce_assignment(self, algorithm):
        model, pts = self.model(algorithm)
        for i, row in enumerate(pts):
            assert assign_concept(model, row) == model.assignments[i]

    def test_centroid_maps_to_own_cluster(self):
        model, _ = self.model()
        for j in range(model.n_concepts):
            assert assign_concept(model, model.clustering.centroids[j]) == j

    def test_midpoint_tie_goes_low(self):
        model, _ = self.model()
        mid = model.clustering.centroids.mean(axis=0)
        assert assign_concept(model, mid) == 0

    def test_dim_mismatch(self):
        model, _ = self.model()
        with pytest.raises(InputError):
            assign_concept(model, np.zeros(5))

    def test_dbscan_far_point_is_noise(self):
        model, _ = self.model("dbscan")
        assert assign_concept(model, np.array([1e6, 1e6])) == -1


class TestRepresentations:
    def make(self):
        ds = chain_dataset()
        pts = np.zeros((12, 2))
        pts[6:, 0] = 10.0
        pts[:, 1] = np.arange(12) * 0.01  # strict distance ordering
        trace = fake_trace(pts)
        model = discover_concepts(trace, 0, DiscoveryConfig("kmeans", k=2, seed=0), ds)
        return ds, model

    def test_singleton_cluster_top1(self):
        ds = chain_dataset(3)
        pts = np.array([[0.0], [0.1], [99.0]])
        trace = fake_trace(pts)
        model = discover_concepts(trace, 0, DiscoveryConfig("kmeans", k=2, seed=1), ds)
        lone = int(model.assignments[2])
        reps = top_representations(model, ds, RepresentationQuery(concept=lone, n=1, top_m=1))
        assert len(reps) == 1
        assert reps[0].node == 2

    def test_zero_radius_is_anchor_only(self):
        ds, model = self.make()
        reps = top_representations(model, ds, RepresentationQuery(concept=0, n=0, top_m=3))
        for r in reps:
            assert r.subgraph.num_nodes == 1
            assert r.subgraph.anchor_ids == frozenset([0])

    def test_top_m_exceeding_members_returns_all(self):
        ds, model = self.make()
        reps = top_representations(model, ds, RepresentationQuery(concept=0, n=1, top_m=50))
        assert len(reps) == 6

    def test_centroid_order_ascending_distance(self):
        ds, model = self.make()
        reps = top_representations(model, ds, RepresentationQuery(concept=0, n=1, top_m=6))
        dists = [r.distance for r in reps]
        assert dists == sorted(dists)

    def test_instance_query_puts_own_view_first(self):
        ds, model = self.make()
        concept = int(model.assignments[4])
        reps = top_representations(
            model, ds,
            RepresentationQuery(concept=concept, n=1, top_m=3, order="node", node=4),
        )
        assert reps[0].node == 4
        local_anchor = next(iter(reps[0].subgraph.anchor_ids))
        assert reps[0].subgraph.parent_node_ids[local_anchor] == 4

    def test_empty_concept_error(self):
        ds, model = self.make()
        with pytest.raises(EmptyConceptError):
            top_representations(model, ds, RepresentationQuery(concept=7, n=1, top_m=1))

    def test_query_validation(self):
        with pytest.raises(InputError):
            RepresentationQuery(concept=0, n=-1)
        with pytest.raises(InputError):
            RepresentationQuery(concept=0, n=1, top_m=0)
        with pytest.raises(InputError):
            RepresentationQuery(concept=0, n=1, order="node")


class TestContribution:
    def graph_model(self, k=2):
        ds = graph_dataset()
        pts = np.arange(ds.total_nodes, dtype=np.float64)[:, None]
        trace = ActivationTrace(
            layers=(
                TraceLayer("conv", "node", pts),
                TraceLayer("linear", "graph", np.tile([-0.01, -5.0], (3, 1))),
            ),
            final_conv_index=0,
        )
        return ds, discover_concepts(trace, 0, DiscoveryConfig("kmeans", k=k, seed=0), ds)

    def test_k1_histogram(self):
        ds, model = self.graph_model(k=1)
        assert concept_contribution(model, 0) == {0: 3}
        assert concept_contribution(model, 1) == {0: 4}

    def test_total_matches_node_count(self):
        ds, model = self.graph_model(k=3)
        for gi, g in enumerate(ds.graphs):
            assert sum(concept_contribution(model, gi).values()) == g.num_nodes

    def test_accepts_graph_object(self):
        ds, model = self.graph_model()
        assert concept_contribution(model, ds.graphs[2]) == concept_contribution(model, 2)

    def test_unknown_graph(self):
        ds, model = self.graph_model()
        with pytest.raises(InputError):
            concept_contribution(model, 10)
        with pytest.raises(InputError):
            concept_contribution(model, Graph.build(2, [(0, 1)], node_features=np.ones((2, 1))))


class TestClassConceptDistribution:
    def test_row_sums_are_class_counts(self):
        ds = chain_dataset(12, num_classes=3)
        pts = np.random.default_rng(3).standard_normal((12, 2))
        model = discover_concepts(fake_trace(pts, num_classes=3), 0,
                                  DiscoveryConfig("kmeans", k=4, seed=0), ds)
        table = class_concept_distribution(model, ds)
        np.testing.assert_array_equal(table.sum(axis=1), np.bincount(ds.unit_labels, minlength=3))
        assert table.sum() == 12

    def test_perfect_alignment_is_diagonalish(self):
        ds = chain_dataset(12, num_classes=2)
        pts = np.zeros((12, 1))
        pts[ds.unit_labels == 1] = 5.0
        model = discover_concepts(fake_trace(pts), 0, DiscoveryConfig("kmeans", k=2, seed=0), ds)
        table = class_concept_distribution(model, ds)
        assert (table > 0).sum() == 2  # one concept per class

    def test_predictions_flag_uses_model_output(self):
        ds = chain_dataset(12, num_classes=2)
        preds = np.ones(12, dtype=np.int64)  # everything predicted class 1
        pts = np.random.default_rng(4).standard_normal((12, 2))
        model = discover_concepts(fake_trace(pts, predictions=preds), 0,
                                  DiscoveryConfig("kmeans", k=2, seed=0), ds)
        table = class_concept_distribution(model, ds, use_predictions=True)
        assert table[0].sum() == 0
        assert table[1].sum() == 12
