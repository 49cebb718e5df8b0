"""Correlation-distance hierarchical clustering of window features.

Windows are compared by the squared Pearson correlation of their feature
rows, turned into the distance 1 - corr^2 in [0, 1].  Agglomeration is
the textbook O(W^3) loop with Lance-Williams updates for the average,
complete, and single linkages; merge order is made fully deterministic
by breaking distance ties toward the lexicographically smallest pair of
cluster ids.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

LINKAGES = ("average", "complete", "single")


@dataclass
class DistanceMatrix:
    """Symmetric W x W distances with zero diagonal, entries in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.array_equal(v, v.T):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(v) != 0.0):
            raise ValueError("distance matrix diagonal must be zero")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("distances must lie in [0, 1]")

    @property
    def n_items(self) -> int:
        return self.values.shape[0]


@dataclass
class ClusterAssignment:
    """Flat labels 1..k plus the full merge history that produced them.

    ``merge_tree`` rows are (id_a, id_b, distance, new_size) with
    singleton ids 0..W-1 and merged ids W, W+1, ... in merge order.
    """

    labels: np.ndarray
    n_clusters: int
    linkage: str
    merge_tree: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.min(initial=1) < 1 or self.labels.max(initial=1) > self.n_clusters:
            raise ValueError("labels must lie in 1..n_clusters")

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def correlation_distance(features: np.ndarray) -> DistanceMatrix:
    """1 - corr^2 between feature rows; constant rows sit at distance 1."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ValueError("features must be 2-D (windows x features)")
    if features.shape[0] < 2:
        raise ValueError("need at least two rows to compare")
    centered = features - features.mean(axis=1, keepdims=True)
    gram = centered @ centered.T
    norms = np.sqrt(np.diag(gram).copy())
    flat = norms == 0.0
    if flat.any():
        warnings.warn(
            f"{int(flat.sum())} constant feature rows get correlation 0 with everything",
            stacklevel=2,
        )
        norms[flat] = 1.0  # keeps the division defined; rows are zeroed below
    corr = gram / np.outer(norms, norms)
    corr[flat, :] = 0.0
    corr[:, flat] = 0.0
    corr = np.clip(corr, -1.0, 1.0)
    dist = 1.0 - corr**2
    np.fill_diagonal(dist, 0.0)
    return DistanceMatrix(dist)


def _lance_williams(linkage: str, d_ki: float, d_kj: float, size_i: int, size_j: int) -> float:
    if linkage == "average":
        return (size_i * d_ki + size_j * d_kj) / (size_i + size_j)
    if linkage == "complete":
        return max(d_ki, d_kj)
    if linkage == "single":
        return min(d_ki, d_kj)
    raise ValueError(f"unknown linkage {linkage!r}; choose from {LINKAGES}")


def hierarchical_cluster(
    dist: DistanceMatrix | np.ndarray, n_clusters: int, linkage: str = "average"
) -> ClusterAssignment:
    """Agglomerate singletons and cut the tree at ``n_clusters`` groups.

    Output labels are 1..k, numbered by each cluster's smallest member
    index so a given partition always gets the same labelling.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; choose from {LINKAGES}")
    if isinstance(dist, DistanceMatrix):
        base = dist.values
    else:
        base = DistanceMatrix(np.asarray(dist, dtype=float)).values
    n = base.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters={n_clusters} out of range 1..{n}")

    total_ids = 2 * n - 1
    work = np.full((total_ids, total_ids), np.inf)
    work[:n, :n] = base
    sizes = np.zeros(total_ids, dtype=int)
    sizes[:n] = 1
    active = list(range(n))
    merge_tree = np.zeros((n - 1, 4))

    for step in range(n - 1):
        best = (np.inf, -1, -1)
        for ai, i in enumerate(active):
            row = work[i]
            for j in active[ai + 1 :]:
                d = row[j]
                if d < best[0]:
                    best = (d, i, j)
        d, i, j = best
        new_id = n + step
        for k in active:
            if k == i or k == j:
                continue
            upd = _lance_williams(linkage, work[k, i], work[k, j], sizes[i], sizes[j])
            work[k, new_id] = upd
            work[new_id, k] = upd
        sizes[new_id] = sizes[i] + sizes[j]
        merge_tree[step] = (i, j, d, sizes[new_id])
        active.remove(i)
        active.remove(j)
        active.append(new_id)

    labels = _cut_tree(merge_tree, n, n_clusters)
    return ClusterAssignment(labels, n_clusters, linkage, merge_tree)


def _cut_tree(merge_tree: np.ndarray, n: int, n_clusters: int) -> np.ndarray:
    """Replay the first n - k merges and relabel components 1..k."""
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step in range(n - n_clusters):
        a, b = int(merge_tree[step, 0]), int(merge_tree[step, 1])
        new_id = n + step
        parent[find(a)] = new_id
        parent[find(b)] = new_id

    roots = [find(i) for i in range(n)]
    first_member: dict[int, int] = {}
    for i, r in enumerate(roots):
        first_member.setdefault(r, i)
    order = sorted(first_member, key=first_member.get)
    label_of_root = {r: k + 1 for k, r in enumerate(order)}
    return np.array([label_of_root[r] for r in roots], dtype=int)


def cluster_medoid(dist: DistanceMatrix | np.ndarray, members: np.ndarray) -> int:
    """Member with the smallest summed distance to the rest; ties go low."""
    values = dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist, dtype=float)
    members = np.sort(np.asarray(members, dtype=int))
    if members.size == 0:
        raise ValueError("empty member set has no medoid")
    sums = values[np.ix_(members, members)].sum(axis=1)
    return int(members[np.argmin(sums)])


def cluster_cost(dist: DistanceMatrix | np.ndarray, labels: np.ndarray) -> float:
    """Total within-cluster distance to each cluster's medoid."""
    values = dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist, dtype=float)
    labels = np.asarray(labels, dtype=int)
    cost = 0.0
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        med = cluster_medoid(values, members)
        cost += float(values[members, med].sum())
    return cost
