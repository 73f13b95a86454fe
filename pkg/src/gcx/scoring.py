"""Score reports for a concept model, cached inside the run artifact."""

from __future__ import annotations

from typing import Optional

from .errors import EmptyReportError
from .metrics import concept_completeness, concept_purity, heuristic_recovery_count
from .runs import RunArtifact

HEURISTIC_DATASETS = ("ba_shapes", "ba_community")


def compute_scores(
    artifact: RunArtifact,
    model_id: int,
    n: int,
    top_m: int = 3,
    use_cache: bool = True,
    node_limit: Optional[int] = None,
) -> dict:
    """Completeness + purity (+ heuristic recovery where applicable) for one model."""
    if use_cache:
        cached = artifact.load_cached_score(model_id, n, top_m)
        if cached is not None:
            return cached
    model = artifact.load_concept_model(model_id)
    dataset = artifact.dataset
    completeness = concept_completeness(model, dataset).to_dict()
    purity_kwargs = {} if node_limit is None else {"node_limit": node_limit}
    try:
        purity = concept_purity(model, dataset, n=n, top_m=top_m, **purity_kwargs).to_dict()
    except EmptyReportError as exc:
        purity = {"empty": str(exc)}
    heuristics = None
    if dataset.name in HEURISTIC_DATASETS:
        count, hits = heuristic_recovery_count(model, dataset, n=n, top_m=top_m)
        heuristics = {"recovered": count, "hits": hits}
    report = {
        "model_id": model_id,
        "n": n,
        "top_m": top_m,
        "dataset": dataset.name,
        "completeness": completeness,
        "purity": purity,
        "heuristics": heuristics,
        "model_metrics": artifact.manifest["metrics"],
    }
    if use_cache:
        artifact.store_score(model_id, n, top_m, report)
    return report
