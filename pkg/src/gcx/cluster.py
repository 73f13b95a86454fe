"""Activation-space clustering and dimensionality reduction.

k-Means is the primary discovery path; Ward agglomerative clustering and
DBSCAN are the benchmarked alternatives, PCA the optional reduction, and the
silhouette coefficient the cluster-count diagnostic. Everything is
deterministic: seeded initialization, index-order tie-breaks, and canonical
cluster ids (first member wins).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.cluster.hierarchy import linkage

from .errors import CapacityError, InputError

NOISE = -1
KMEANS_MAX_ITER = 300
PAIRWISE_POINT_CAP = 20_000  # O(n^2)-distance algorithms refuse beyond this


@dataclass(frozen=True)
class Clustering:
    """A fitted partition of points: dense ids 0..K-1, NOISE (-1) for DBSCAN outliers."""

    assignments: np.ndarray
    n_clusters: int
    algorithm: str
    params: dict
    seed: Optional[int] = None
    centroids: Optional[np.ndarray] = None
    inertia: Optional[float] = None
    inertia_history: Optional[tuple] = None
    core_mask: Optional[np.ndarray] = None  # DBSCAN core points

    def __post_init__(self):
        labels = self.assignments
        non_noise = labels[labels != NOISE]
        if non_noise.size:
            uniq = np.unique(non_noise)
            if uniq.min() < 0 or uniq.max() >= self.n_clusters or len(uniq) != self.n_clusters:
                raise InputError("cluster ids must be dense in 0..K-1")
        elif self.n_clusters != 0:
            raise InputError("no members but n_clusters > 0")
        if self.centroids is not None and len(self.centroids) != self.n_clusters:
            raise InputError("centroid count must equal n_clusters")

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)

    def sizes(self) -> list[int]:
        return [int((self.assignments == c).sum()) for c in range(self.n_clusters)]


@dataclass(frozen=True)
class Dendrogram:
    """Agglomerative merge history: (cluster_a, cluster_b, distance, new_size) per step."""

    merges: tuple[tuple[int, int, float, int], ...]
    num_points: int

    def __post_init__(self):
        if len(self.merges) != max(0, self.num_points - 1):
            raise InputError("a dendrogram over N points has exactly N-1 merges")


def _chunked_sq_dists(points: np.ndarray, centers: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Exact squared Euclidean distances, chunked to bound memory."""
    n = len(points)
    out = np.empty((n, len(centers)), dtype=np.float64)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        diff = points[lo:hi, None, :] - centers[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def nearest_center(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center per point; ties go to the lower index."""
    return np.argmin(_chunked_sq_dists(points, centers), axis=1)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = _chunked_sq_dists(points, centers[:1])[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            pick = int(rng.integers(n))  # all points coincide with chosen centers
        else:
            pick = int(rng.choice(n, p=d2 / total))
        centers[j] = points[pick]
        d2 = np.minimum(d2, _chunked_sq_dists(points, centers[j : j + 1])[:, 0])
    return centers


def kmeans(points: np.ndarray, k: int, seed: int) -> Clustering:
    """Seeded k-means++ then Lloyd iterations to an assignment fixpoint.

    Empty clusters are re-seeded from the point farthest from its centroid so
    the result always has exactly k clusters.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if not (1 <= k <= n):
        raise InputError(f"k must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(points, k, rng)
    assign = None
    history = []
    for _ in range(KMEANS_MAX_ITER):
        d2 = _chunked_sq_dists(points, centers)
        new_assign = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), new_assign].sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        counts = np.bincount(assign, minlength=k)
        for c in range(k):
            if counts[c] > 0:
                centers[c] = points[assign == c].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            dist_own = _chunked_sq_dists(points, centers)[np.arange(n), assign]
            order = np.argsort(-dist_own, kind="stable")
            for slot, c in enumerate(empties):
                centers[c] = points[order[slot]]
    d2 = _chunked_sq_dists(points, centers)
    assign = np.argmin(d2, axis=1)
    # Pathological duplicate-point case: force any still-empty cluster to own
    # the point farthest from its assigned centroid.
    counts = np.bincount(assign, minlength=k)
    if (counts == 0).any():
        dist_own = d2[np.arange(n), assign]
        order = np.argsort(-dist_own, kind="stable")
        slot = 0
        for c in np.flatnonzero(counts == 0):
            while counts[assign[order[slot]]] <= 1:
                slot += 1
            counts[assign[order[slot]]] -= 1
            assign[order[slot]] = c
            counts[c] = 1
            centers[c] = points[order[slot]]
            slot += 1
        d2 = _chunked_sq_dists(points, centers)
    inertia = float(d2[np.arange(n), assign].sum())
    return Clustering(
        assignments=assign.astype(np.int64),
        n_clusters=k,
        algorithm="kmeans",
        params={"k": k},
        seed=seed,
        centroids=centers.copy(),
        inertia=inertia,
        inertia_history=tuple(history),
    )


def _canonicalize(raw_labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel clusters densely, ordered by each cluster's first member index."""
    out = np.full(len(raw_labels), NOISE, dtype=np.int64)
    mapping: dict = {}
    for i, lab in enumerate(raw_labels):
        if lab == NOISE:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out, len(mapping)


def _cluster_means(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    return np.vstack([points[labels == c].mean(axis=0) for c in range(k)])


def ahc_ward(points: np.ndarray, num_clusters: int) -> tuple[Clustering, Dendrogram]:
    """Ward-linkage agglomerative clustering cut to exactly num_clusters groups."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if not (1 <= num_clusters <= n):
        raise InputError(f"num_clusters must be in [1, {n}]")
    if n > PAIRWISE_POINT_CAP:
        raise CapacityError(f"agglomerative clustering capped at {PAIRWISE_POINT_CAP} points")
    if n == 1:
        merges: tuple = ()
        labels = np.zeros(1, dtype=np.int64)
        dend = Dendrogram(merges=merges, num_points=1)
        clustering = Clustering(
            assignments=labels, n_clusters=1, algorithm="ahc",
            params={"num_clusters": 1}, centroids=points.copy(),
        )
        return clustering, dend
    z = linkage(points, method="ward")
    merges = tuple((int(a), int(b), float(d), int(s)) for a, b, d, s in z)
    dend = Dendrogram(merges=merges, num_points=n)

    # Apply the first N-K merges with union-find to obtain exactly K groups.
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, (a, b, _, _) in enumerate(merges[: n - num_clusters]):
        new = n + step
        parent[find(a)] = new
        parent[find(b)] = new
    raw = np.asarray([find(i) for i in range(n)])
    labels, k = _canonicalize(raw)
    clustering = Clustering(
        assignments=labels,
        n_clusters=k,
        algorithm="ahc",
        params={"num_clusters": num_clusters},
        centroids=_cluster_means(points, labels, k),
    )
    return clustering, dend


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> Clustering:
    """Density clustering with standard core/border/noise semantics.

    A point is core when its closed eps-ball holds at least min_pts points
    (itself included). Clusters grow from cores in index order; border points
    join the first core cluster that reaches them.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if eps <= 0:
        raise InputError("eps must be > 0")
    if min_pts < 1:
        raise InputError("min_pts must be >= 1")
    if n > PAIRWISE_POINT_CAP:
        raise CapacityError(f"dbscan capped at {PAIRWISE_POINT_CAP} points")
    eps2 = eps * eps
    neighbors = []
    for lo in range(0, n, 2048):
        hi = min(n, lo + 2048)
        diff = points[lo:hi, None, :] - points[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        for row in d2:
            neighbors.append(np.flatnonzero(row <= eps2))
    core = np.asarray([len(nb) >= min_pts for nb in neighbors])
    labels = np.full(n, NOISE, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if not core[i] or labels[i] != NOISE:
            continue
        labels[i] = cluster
        frontier = deque([i])
        while frontier:
            p = frontier.popleft()
            for q in neighbors[p]:
                q = int(q)
                if labels[q] == NOISE:
                    labels[q] = cluster
                    if core[q]:
                        frontier.append(q)
        cluster += 1
    labels, k = _canonicalize(labels)
    return Clustering(
        assignments=labels,
        n_clusters=k,
        algorithm="dbscan",
        params={"eps": float(eps), "min_pts": int(min_pts)},
        centroids=_cluster_means(points, labels, k) if k else None,
        core_mask=core,
    )


@dataclass(frozen=True)
class PcaTransform:
    """Fitted projection: mean plus principal axes (descending variance)."""

    mean: np.ndarray
    components: np.ndarray  # (feature_dim, dims)
    eigenvalues: np.ndarray

    def transform(self, rows: np.ndarray) -> np.ndarray:
        return (np.asarray(rows, dtype=np.float64) - self.mean) @ self.components


def fit_pca(points: np.ndarray, dims: int) -> PcaTransform:
    points = np.asarray(points, dtype=np.float64)
    d = points.shape[1]
    if not (1 <= dims <= d):
        raise InputError(f"dims must be in [1, {d}]")
    mean = points.mean(axis=0)
    centered = points - mean
    denom = max(1, len(points) - 1)
    cov = centered.T @ centered / denom
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order][:dims]
    vecs = eigvecs[:, order][:, :dims]
    # Sign convention: the largest-magnitude loading of each axis is positive.
    for j in range(vecs.shape[1]):
        pivot = np.argmax(np.abs(vecs[:, j]))
        if vecs[pivot, j] < 0:
            vecs[:, j] = -vecs[:, j]
    # C-contiguous so a serialize/reload round trip is bit-identical
    return PcaTransform(
        mean=np.ascontiguousarray(mean),
        components=np.ascontiguousarray(vecs),
        eigenvalues=np.ascontiguousarray(eigvals),
    )


def pca(points: np.ndarray, dims: int) -> np.ndarray:
    """Mean-centered projection onto the top principal axes."""
    t = fit_pca(points, dims)
    return t.transform(points)


def silhouette(points: np.ndarray, clustering: Clustering) -> float:
    """Mean silhouette coefficient over non-noise points."""
    points = np.asarray(points, dtype=np.float64)
    labels = clustering.assignments
    keep = labels != NOISE
    pts = points[keep]
    labs = labels[keep]
    k = clustering.n_clusters
    if k < 2:
        raise InputError("silhouette requires at least 2 clusters")
    if len(pts) > PAIRWISE_POINT_CAP:
        raise CapacityError(f"silhouette capped at {PAIRWISE_POINT_CAP} points")
    counts = np.bincount(labs, minlength=k)
    if (counts == 0).any():
        raise InputError("silhouette requires no empty cluster")
    n = len(pts)
    scores = np.zeros(n)
    for lo in range(0, n, 1024):
        hi = min(n, lo + 1024)
        diff = pts[lo:hi, None, :] - pts[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        # mean distance from each row-point to every cluster
        sums = np.zeros((hi - lo, k))
        for c in range(k):
            sums[:, c] = dist[:, labs == c].sum(axis=1)
        for r in range(hi - lo):
            i = lo + r
            c = labs[i]
            if counts[c] == 1:
                scores[i] = 0.0
                continue
            a = sums[r, c] / (counts[c] - 1)  # own distance excluded (it is 0)
            other = [sums[r, j] / counts[j] for j in range(k) if j != c]
            b = min(other)
            denom = max(a, b)
            scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def suggest_dbscan_eps(points: np.ndarray, k: int = 4) -> float:
    """Median distance to the k-th nearest neighbor; a conventional eps pick."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n <= k:
        raise InputError(f"need more than {k} points")
    if n > PAIRWISE_POINT_CAP:
        raise CapacityError(f"eps suggestion capped at {PAIRWISE_POINT_CAP} points")
    kth = np.empty(n)
    for lo in range(0, n, 1024):
        hi = min(n, lo + 1024)
        diff = points[lo:hi, None, :] - points[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        kth[lo:hi] = np.sqrt(np.sort(d2, axis=1)[:, k])
    value = float(np.median(kth))
    return value if value > 0 else float(np.max(kth)) or 1e-12


def suggest_ahc_clusters(dend: Dendrogram, max_clusters: int = 30) -> int:
    """Cluster count at the largest gap between consecutive merge distances."""
    n = dend.num_points
    if n < 3:
        return max(1, n - 1)
    dists = [m[2] for m in dend.merges]
    best_c, best_gap = 2, -1.0
    for c in range(2, min(max_clusters, n - 1) + 1):
        # cutting between merge (n-c) and (n-c+1) leaves c clusters
        gap = dists[n - c] - dists[n - c - 1]
        if gap > best_gap:
            best_gap, best_c = gap, c
    return best_c
