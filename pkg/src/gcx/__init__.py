"""Concept-based explanations for graph neural networks."""

from .cluster import Clustering, Dendrogram, ahc_ward, dbscan, kmeans, pca, silhouette
from .concepts import (
    ConceptModel,
    DiscoveryConfig,
    RepresentationQuery,
    assign_concept,
    class_concept_distribution,
    concept_contribution,
    discover_concepts,
    top_representations,
)
from .errors import GcxError
from .explain import explain_graph, explain_node
from .ged import EditCostConfig, GedResult, ged_bruteforce_oracle, graph_edit_distance
from .gnn import ModelConfig, TrainedModel, forward, gradient_check, make_preset, normalize_adjacency, train
from .graph import (
    Dataset,
    Graph,
    Subgraph,
    Task,
    add_random_edges,
    disjoint_union,
    is_isomorphic,
    n_hop_neighborhood,
)
from .metrics import concept_completeness, concept_purity, heuristic_recovery_count, train_decision_tree
from .runs import RunArtifact, load_run, save_run
from .synth import build_dataset, generate_ba, generate_tree
from .tu import TuCorpus, load_tu_dataset

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
