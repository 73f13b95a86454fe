import numpy as np
import pytest

from gcx.errors import InputError, TrainingError
from gcx.gnn import (
    LayerSpec,
    ModelConfig,
    TrainedModel,
    forward,
    gradient_check,
    make_preset,
    normalize_adjacency,
    train,
    training_loss,
)
from gcx.graph import Dataset, Graph, Task, make_split
from gcx.synth import build_dataset


def node_config(widths, num_classes, lr=0.01, epochs=50, seed=0):
    layers = [LayerSpec("graph_conv", w, "relu") for w in widths]
    layers.append(LayerSpec("linear", num_classes, "log_softmax"))
    return ModelConfig(tuple(layers), Task.NODE, lr, epochs, seed)


def graph_config(widths, num_classes, lr=0.01, epochs=50, seed=0):
    layers = [LayerSpec("graph_conv", w, "relu") for w in widths]
    layers.append(LayerSpec("global_max_pool"))
    layers.append(LayerSpec("linear", num_classes, "log_softmax"))
    return ModelConfig(tuple(layers), Task.GRAPH, lr, epochs, seed)


def toy_node_dataset(seed=0):
    """Two disconnected 4-cliques with distinct features: linearly separable."""
    edges = [(u, v) for u in range(4) for v in range(u + 1, 4)]
    edges += [(u + 4, v + 4) for u, v in edges]
    feats = np.zeros((8, 2))
    feats[:4, 0] = 1.0
    feats[4:, 1] = 1.0
    g = Graph.build(8, edges, node_features=feats, node_labels=[0] * 4 + [1] * 4)
    mask = np.array([True, True, True, False] * 2)
    return Dataset((g,), Task.NODE, 2, mask, seed)


def toy_graph_dataset(seed=0):
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(8):
        if i % 2 == 0:
            g = Graph.build(3, [(0, 1), (1, 2), (0, 2)],
                            node_features=rng.standard_normal((3, 2)), graph_label=0)
        else:
            g = Graph.build(4, [(0, 1), (1, 2), (2, 3)],
                            node_features=rng.standard_normal((4, 2)), graph_label=1)
        graphs.append(g)
    mask = np.array([True] * 6 + [False] * 2)
    return Dataset(tuple(graphs), Task.GRAPH, 2, mask, seed)


class TestNormalizeAdjacency:
    def test_isolated_node(self):
        a = normalize_adjacency(Graph.build(1, []))
        np.testing.assert_array_equal(a.toarray(), [[1.0]])

    def test_single_edge(self):
        a = normalize_adjacency(Graph.build(2, [(0, 1)])).toarray()
        np.testing.assert_allclose(a, [[0.5, 0.5], [0.5, 0.5]])

    def test_symmetric_and_matches_dense_formula(self):
        rng = np.random.default_rng(0)
        edges = [(u, v) for u in range(10) for v in range(u + 1, 10) if rng.random() < 0.3]
        g = Graph.build(10, edges)
        a = normalize_adjacency(g).toarray()
        dense = np.eye(10)
        for u, v in edges:
            dense[u, v] = dense[v, u] = 1.0
        d = np.diag(1.0 / np.sqrt(dense.sum(axis=1)))
        np.testing.assert_allclose(a, d @ dense @ d, atol=1e-12)
        np.testing.assert_allclose(a, a.T, atol=1e-15)


class TestForward:
    def test_zero_weights_give_uniform_logprobs(self):
        ds = toy_node_dataset()
        config = node_config([3], 2, epochs=0)
        model = train(ds, config)
        zeroed = TrainedModel(
            config=config,
            weights=tuple((np.zeros_like(w), np.zeros_like(b)) for w, b in model.weights),
            train_accuracy=0.0,
            test_accuracy=0.0,
        )
        logp, _ = forward(zeroed, ds)
        np.testing.assert_allclose(logp, np.full_like(logp, -np.log(2)), atol=1e-12)

    def test_rows_sum_to_one(self):
        ds = toy_node_dataset()
        model = train(ds, node_config([4, 4], 2, epochs=20))
        logp, _ = forward(model, ds)
        np.testing.assert_allclose(np.exp(logp).sum(axis=1), 1.0, atol=1e-9)

    def test_trace_layout_node_task(self):
        ds = toy_node_dataset()
        model = train(ds, node_config([4, 3], 2, epochs=5))
        logp, trace = forward(model, ds)
        kinds = [(l.kind, l.row_unit, l.data.shape) for l in trace.layers]
        assert kinds == [("conv", "node", (8, 4)), ("conv", "node", (8, 3)), ("linear", "node", (8, 2))]
        assert trace.final_conv_index == 1
        np.testing.assert_array_equal(trace.layers[-1].data, logp)

    def test_trace_layout_graph_task(self):
        ds = toy_graph_dataset()
        model = train(ds, graph_config([4], 2, epochs=5))
        logp, trace = forward(model, ds)
        assert [l.kind for l in trace.layers] == ["conv", "pool", "linear"]
        assert trace.layers[0].data.shape == (ds.total_nodes, 4)
        assert trace.layers[1].data.shape == (8, 4)
        assert logp.shape == (8, 2)

    def test_preset_output_width_matches_classes(self):
        ds = build_dataset("ba_shapes", 0)
        config = make_preset("ba_shapes", ds, epochs=0)
        model = train(ds, config)
        logp, _ = forward(model, ds)
        assert logp.shape == (700, 4)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(3)
        edges = [(u, v) for u in range(9) for v in range(u + 1, 9) if rng.random() < 0.4]
        feats = rng.standard_normal((9, 3))
        labels = rng.integers(0, 2, size=9)
        g = Graph.build(9, edges, node_features=feats, node_labels=labels)
        ds = Dataset((g,), Task.NODE, 2, make_split(9, 0), 0)
        model = train(ds, node_config([5, 4], 2, epochs=15))
        _, trace = forward(model, ds)

        perm = rng.permutation(9)
        pedges = [(int(perm[u]), int(perm[v])) for u, v in edges]
        pg = Graph.build(9, pedges, node_features=feats[np.argsort(perm)],
                         node_labels=labels[np.argsort(perm)])
        pds = Dataset((pg,), Task.NODE, 2, make_split(9, 0), 0)
        _, ptrace = forward(model, pds)
        inv = np.argsort(perm)
        for layer, player in zip(trace.layers, ptrace.layers):
            np.testing.assert_allclose(player.data, layer.data[inv], atol=1e-10)

    def test_feature_dim_mismatch(self):
        ds = toy_node_dataset()
        model = train(ds, node_config([3], 2, epochs=0))
        other = build_dataset("ba_shapes", 0)
        with pytest.raises(InputError):
            forward(model, other)


class TestTrain:
    def test_linearly_separable_toy_fits(self):
        ds = toy_node_dataset()
        model = train(ds, node_config([6], 2, epochs=300, lr=0.05))
        assert model.train_accuracy == 1.0

    def test_zero_epochs_equals_untrained(self):
        ds = toy_node_dataset()
        a = train(ds, node_config([4], 2, epochs=0, seed=5))
        b = train(ds, node_config([4], 2, epochs=0, seed=5))
        assert a.train_accuracy == b.train_accuracy
        for (w1, b1), (w2, b2) in zip(a.weights, b.weights):
            np.testing.assert_array_equal(w1, w2)

    def test_deterministic_training(self):
        ds = toy_node_dataset()
        a = train(ds, node_config([5, 4], 2, epochs=40, seed=3))
        b = train(ds, node_config([5, 4], 2, epochs=40, seed=3))
        for (w1, b1), (w2, b2) in zip(a.weights, b.weights):
            np.testing.assert_array_equal(w1, w2)
            np.testing.assert_array_equal(b1, b2)

    def test_loss_decreases(self):
        ds = toy_node_dataset()
        untrained = train(ds, node_config([6], 2, epochs=0, seed=1))
        trained = train(ds, node_config([6], 2, epochs=100, seed=1))
        assert training_loss(trained, ds) < training_loss(untrained, ds)

    def test_graph_task_trains(self):
        ds = toy_graph_dataset()
        model = train(ds, graph_config([6, 6], 2, epochs=200, lr=0.02))
        assert model.train_accuracy == 1.0

    def test_divergence_raises_with_epoch(self):
        ds = toy_node_dataset()
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingError) as err:
                train(ds, node_config([4, 4, 4], 2, epochs=50, lr=1e150))
        assert err.value.epoch >= 1

    def test_task_mismatch(self):
        ds = toy_node_dataset()
        with pytest.raises(InputError):
            train(ds, graph_config([4], 2))


class TestConfigValidation:
    def test_final_layer_must_classify(self):
        with pytest.raises(InputError):
            ModelConfig((LayerSpec("graph_conv", 4, "relu"),), Task.NODE, 0.01, 1, 0)

    def test_pool_position(self):
        layers = (
            LayerSpec("global_max_pool"),
            LayerSpec("graph_conv", 4, "relu"),
            LayerSpec("linear", 2, "log_softmax"),
        )
        with pytest.raises(InputError):
            ModelConfig(layers, Task.GRAPH, 0.01, 1, 0)

    def test_unknown_preset(self):
        ds = toy_node_dataset()
        with pytest.raises(InputError):
            make_preset("resnet50", ds)

    def test_preset_task_mismatch(self):
        ds = toy_node_dataset()
        with pytest.raises(InputError):
            make_preset("mutagenicity", ds)


class TestGradientCheck:
    def test_node_task_small_error(self):
        ds = toy_node_dataset()
        err = gradient_check(node_config([5, 4, 3], 2), ds, seed=0)
        assert err < 1e-4

    def test_graph_task_small_error(self):
        ds = toy_graph_dataset()
        err = gradient_check(graph_config([4, 3], 2), ds, seed=0)
        assert err < 1e-4

    def test_error_shrinks_with_step(self):
        ds = toy_node_dataset()
        coarse = gradient_check(node_config([4], 2), ds, seed=2, fd_step=1e-3)
        fine = gradient_check(node_config([4], 2), ds, seed=2, fd_step=1e-5)
        assert fine <= coarse

    def test_rejects_large_fixture(self):
        ds = build_dataset("ba_shapes", 0)
        with pytest.raises(InputError):
            gradient_check(node_config([4], 4), ds, seed=0)


class TestTraceConsistency:
    def test_forward_reproduces_stored_accuracy(self):
        ds = toy_node_dataset()
        model = train(ds, node_config([5], 2, epochs=60))
        logp, _ = forward(model, ds)
        labels = ds.unit_labels
        train_acc = float((logp[ds.train_mask].argmax(1) == labels[ds.train_mask]).mean())
        test_acc = float((logp[ds.test_mask].argmax(1) == labels[ds.test_mask]).mean())
        assert train_acc == model.train_accuracy
        assert test_acc == model.test_accuracy
