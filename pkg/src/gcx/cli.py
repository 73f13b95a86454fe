"""Command-line driver: gen, ingest, train, discover, score, explain, ged, serve, export."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .concepts import DiscoveryConfig
from .errors import CapacityError, GcxError, InputError
from .ged import EditCostConfig, graph_edit_distance, plain
from .gnn import PRESETS, forward, make_preset, train
from .graph import Dataset, Graph
from .runs import RunArtifact, save_run
from .scoring import compute_scores
from .synth import DATASET_NAMES, build_dataset
from .tu import TuCorpus, load_tu_dataset

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_EXCEEDED = 3


def _resolve(path: str) -> str:
    """Relative run/dataset paths resolve under GCX_DATA_DIR when set."""
    root = os.environ.get("GCX_DATA_DIR")
    if root and not os.path.isabs(path) and not os.path.exists(path):
        return os.path.join(root, path)
    return path


def _dump(path: str, obj) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _load_dataset_arg(spec: str, seed: int) -> Dataset:
    if spec in DATASET_NAMES:
        return build_dataset(spec, seed)
    path = _resolve(spec)
    if os.path.isdir(path):
        path = os.path.join(path, "dataset.json")
    with open(path) as fh:
        return Dataset.loads(fh.read())


def cmd_gen(args) -> int:
    dataset = build_dataset(args.name, args.seed)
    out = _resolve(args.out)
    g = dataset.graphs[0]
    _dump(os.path.join(out, "graph.json"), g.to_dict())
    _dump(
        os.path.join(out, "labels.json"),
        {
            "node_labels": [int(x) for x in g.node_labels],
            "train_mask": [bool(x) for x in dataset.train_mask],
            "num_classes": dataset.num_classes,
            "class_names": list(dataset.class_names or []),
        },
    )
    _dump(os.path.join(out, "dataset.json"), dataset.to_dict())
    _dump(
        os.path.join(out, "manifest.json"),
        {"version": 1, "dataset": args.name, "seed": args.seed, "kind": "synthetic"},
    )
    _emit(args, {"name": args.name, "seed": args.seed, "num_nodes": g.num_nodes, "out": out},
          f"wrote {args.name} (seed {args.seed}, {g.num_nodes} nodes) to {out}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    dataset = load_tu_dataset(TuCorpus(args.dir, args.prefix), seed=args.seed)
    out = _resolve(args.out)
    _dump(os.path.join(out, "dataset.json"), dataset.to_dict())
    _dump(
        os.path.join(out, "manifest.json"),
        {"version": 1, "dataset": dataset.name, "seed": args.seed, "kind": "tu",
         "num_graphs": len(dataset.graphs)},
    )
    _emit(args, {"name": dataset.name, "num_graphs": len(dataset.graphs), "out": out},
          f"ingested {len(dataset.graphs)} graphs from {args.prefix} into {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = _load_dataset_arg(args.dataset, args.dataset_seed)
    config = make_preset(args.preset, dataset, seed=args.seed,
                         epochs=args.epochs, learning_rate=args.lr)
    model = train(dataset, config)
    _, trace = forward(model, dataset)
    out = _resolve(args.out)
    save_run(out, dataset, model, trace, extra_manifest={"preset": args.preset})
    payload = {
        "out": out,
        "preset": args.preset,
        "train_accuracy": model.train_accuracy,
        "test_accuracy": model.test_accuracy,
    }
    _emit(args, payload,
          f"trained {args.preset}: train acc {model.train_accuracy:.3f}, "
          f"test acc {model.test_accuracy:.3f} -> {out}")
    return EXIT_OK


def cmd_discover(args) -> int:
    artifact = RunArtifact(_resolve(args.run))
    layer = args.layer if args.layer is not None else artifact.trace.final_conv_index
    if args.algorithm in ("kmeans", "ahc"):
        if args.k is None:
            raise InputError("--k is required for kmeans/ahc")
        config = DiscoveryConfig(algorithm=args.algorithm, k=args.k,
                                 pca_dims=args.pca, seed=args.seed)
    else:
        if args.eps is None or args.min_pts is None:
            raise InputError("--eps and --min-pts are required for dbscan")
        config = DiscoveryConfig(algorithm="dbscan", eps=args.eps, min_pts=args.min_pts,
                                 pca_dims=args.pca, seed=args.seed)
    model_id, model = artifact.add_concept_model(layer, config)
    payload = {
        "id": model_id,
        "layer": layer,
        "n_concepts": model.n_concepts,
        "cluster_sizes": model.clustering.sizes(),
    }
    _emit(args, payload,
          f"model {model_id}: {model.n_concepts} concepts on layer {layer}, "
          f"sizes {model.clustering.sizes()}")
    return EXIT_OK


def cmd_score(args) -> int:
    artifact = RunArtifact(_resolve(args.run))
    report = compute_scores(artifact, args.model, n=args.n, top_m=args.top)
    if args.out:
        _dump(_resolve(args.out), report)
    purity = report["purity"]
    text = [f"completeness: {report['completeness']['score']:.3f}"]
    if "avg" in purity:
        text.append(f"purity min/max/avg: {purity['min']:.3f}/{purity['max']:.3f}/{purity['avg']:.3f}")
    else:
        text.append("purity: no scored concepts")
    if report["heuristics"] is not None:
        text.append(f"heuristics recovered: {report['heuristics']['recovered']}/8")
    _emit(args, report, "; ".join(text))
    return EXIT_OK


def cmd_explain(args) -> int:
    artifact = RunArtifact(_resolve(args.run))
    model = artifact.load_concept_model(args.model)
    from .explain import explain_graph, explain_node

    if args.unit == "node":
        doc = explain_node(model, artifact.dataset, args.id, n=args.n, top_m=args.top).to_dict(artifact.dataset)
    else:
        doc = explain_graph(model, artifact.dataset, args.id, n=args.n).to_dict(artifact.dataset)
    if args.out:
        _dump(_resolve(args.out), doc)
    _emit(args, doc, json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_ged(args) -> int:
    def load(path):
        with open(path) as fh:
            d = json.load(fh)
        tags = d.get("node_tags")
        return plain(d["num_nodes"], d.get("edges", []), tags)

    g1, g2 = load(args.file_a), load(args.file_b)
    costs = EditCostConfig(respect_tags=args.tags)
    result = graph_edit_distance(g1, g2, costs, node_limit=args.node_limit)
    if result.exceeded:
        _emit(args, {"exceeded": True, "reason": result.reason}, f"exceeded: {result.reason}")
        return EXIT_EXCEEDED
    _emit(args, {"distance": result.distance}, f"{result.distance}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(_resolve(args.run), frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_export(args) -> int:
    artifact = RunArtifact(_resolve(args.run))
    if args.what == "dataset":
        payload = artifact.dataset.to_dict()
    elif args.what == "graph":
        payload = artifact.dataset.graphs[args.index].to_dict()
    else:
        raise InputError(f"unknown export target {args.what!r}")
    if args.out:
        _dump(_resolve(args.out), payload)
        _emit(args, {"out": args.out}, f"wrote {args.what} to {args.out}")
    else:
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gcx", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_json(sp):
        sp.add_argument("--json", action="store_true", help="emit machine-readable JSON")

    def add_seed(sp):
        # every verb takes --seed, even where it only labels the invocation
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("gen", help="generate a synthetic dataset")
    sp.add_argument("name", choices=DATASET_NAMES)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    add_json(sp)
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("ingest", help="load a TU-format corpus")
    sp.add_argument("--dir", required=True)
    sp.add_argument("--prefix", required=True)
    add_seed(sp)
    sp.add_argument("--out", required=True)
    add_json(sp)
    sp.set_defaults(fn=cmd_ingest)

    sp = sub.add_parser("train", help="train a GCN preset and save a run artifact")
    sp.add_argument("--dataset", required=True, help="synthetic name or dataset dir/json")
    sp.add_argument("--dataset-seed", type=int, default=0)
    sp.add_argument("--preset", required=True, choices=sorted(PRESETS))
    add_seed(sp)
    sp.add_argument("--epochs", type=int, default=None, help="override preset epochs")
    sp.add_argument("--lr", type=float, default=None, help="override preset learning rate")
    sp.add_argument("--out", required=True)
    add_json(sp)
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("discover", help="fit a concept model on a run's activations")
    sp.add_argument("run")
    sp.add_argument("--layer", type=int, default=None, help="default: final conv layer")
    sp.add_argument("--algorithm", choices=("kmeans", "ahc", "dbscan"), default="kmeans")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--min-pts", type=int, default=None)
    sp.add_argument("--pca", type=int, default=None, help="reduce to this many dims first")
    add_seed(sp)
    add_json(sp)
    sp.set_defaults(fn=cmd_discover)

    sp = sub.add_parser("score", help="completeness/purity/heuristics for a concept model")
    sp.add_argument("run")
    sp.add_argument("--model", type=int, default=0)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--top", type=int, default=3)
    sp.add_argument("--out", default=None)
    add_seed(sp)
    add_json(sp)
    sp.set_defaults(fn=cmd_score)

    sp = sub.add_parser("explain", help="explanation document for a node or graph")
    sp.add_argument("unit", choices=("node", "graph"))
    sp.add_argument("run")
    sp.add_argument("--model", type=int, default=0)
    sp.add_argument("--id", type=int, required=True)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--top", type=int, default=5)
    sp.add_argument("--out", default=None)
    add_seed(sp)
    add_json(sp)
    sp.set_defaults(fn=cmd_explain)

    sp = sub.add_parser("ged", help="exact edit distance between two graph files")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--tags", action="store_true", help="charge substitutions on tag mismatch")
    sp.add_argument("--node-limit", type=int, default=15)
    add_seed(sp)
    add_json(sp)
    sp.set_defaults(fn=cmd_ged)

    sp = sub.add_parser("serve", help="serve the query API (and UI bundle when built)")
    sp.add_argument("run")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8750)
    sp.add_argument("--frontend", default=None, help="directory with the built UI bundle")
    add_seed(sp)
    add_json(sp)
    sp.set_defaults(fn=cmd_serve)

    sp = sub.add_parser("export", help="export artifact contents as canonical JSON")
    sp.add_argument("run")
    sp.add_argument("--what", choices=("dataset", "graph"), default="dataset")
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--out", default=None)
    add_seed(sp)
    add_json(sp)
    sp.set_defaults(fn=cmd_export)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXCEEDED
    except (GcxError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
