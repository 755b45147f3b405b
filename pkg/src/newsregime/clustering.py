"""Density-based hierarchical clustering (HDBSCAN*) of reduced keyword vectors.

Pipeline: core distances -> mutual-reachability graph -> minimum spanning
tree -> single-linkage hierarchy -> condensed tree -> excess-of-mass
selection. Everything is dense O(n^2), which is fine for keyword vocabularies
of a few thousand entries.
"""
from __future__ import annotations

import csv
from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .vectors import VectorTable

NOISE = -1


@dataclass(frozen=True)
class HdbscanParams:
    min_cluster_size: int = 200
    min_samples: int | None = None

    def __post_init__(self):
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if self.min_samples is not None and self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")

    @property
    def k(self) -> int:
        return self.min_cluster_size if self.min_samples is None else self.min_samples


@dataclass(frozen=True, eq=False)
class ClusterResult:
    keywords: tuple[str, ...]
    labels: np.ndarray
    probabilities: np.ndarray
    cluster_count: int

    def label_of(self, keyword: str) -> int:
        return int(self.labels[self.keywords.index(keyword)])

    def members(self, cluster_id: int) -> list[str]:
        return [k for k, l in zip(self.keywords, self.labels) if l == cluster_id]

    def as_dict(self) -> dict[str, int]:
        return {k: int(l) for k, l in zip(self.keywords, self.labels)}


def core_distances(dist: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance to the ``min_samples``-th nearest neighbour, the point itself included."""
    return np.partition(dist, min_samples - 1, axis=1)[:, min_samples - 1]


def mutual_reachability(dist: np.ndarray, core: np.ndarray) -> np.ndarray:
    return np.maximum(dist, np.maximum.outer(core, core))


def minimum_spanning_tree(weights: np.ndarray) -> np.ndarray:
    """Prim's algorithm on a dense symmetric matrix.

    Returns an ``(n-1, 3)`` array of ``(i, j, w)`` with ``i < j``, sorted by
    ``(w, i, j)``.
    """
    n = len(weights)
    if n < 2:
        return np.zeros((0, 3))
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = weights[0].astype(float).copy()
    parent = np.zeros(n, dtype=np.intp)
    edges = np.empty((n - 1, 3))
    for e in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))
        a, b = sorted((int(parent[j]), j))
        edges[e] = (a, b, best[j])
        in_tree[j] = True
        row = weights[j]
        better = (~in_tree) & ((row < best) | ((row == best) & (j < parent)))
        best[better] = row[better]
        parent[better] = j
    order = np.lexsort((edges[:, 1], edges[:, 0], edges[:, 2]))
    return edges[order]


def single_linkage(mst: np.ndarray, n: int) -> np.ndarray:
    """Convert sorted MST edges into a scipy-style linkage matrix ``[a, b, dist, size]``."""
    parent = np.arange(2 * n - 1)
    size = np.ones(2 * n - 1, dtype=np.intp)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    out = np.empty((n - 1, 4))
    for k, (i, j, w) in enumerate(mst):
        a, b = find(int(i)), find(int(j))
        new = n + k
        parent[a] = parent[b] = new
        size[new] = size[a] + size[b]
        out[k] = (a, b, w, size[new])
    return out


def _multiway_children(linkage: np.ndarray, n: int) -> dict[int, list[int]]:
    """Children of each internal node, with equal-height merges collapsed.

    Tied mutual-reachability weights make the binary merge order arbitrary;
    collapsing chains of merges at the same height makes the condensed tree
    depend only on the connected components at each level.
    """
    kids: dict[int, list[int]] = {}
    for k in range(len(linkage)):
        node = n + k
        height = linkage[k, 2]
        out = []
        for child in (int(linkage[k, 0]), int(linkage[k, 1])):
            if child >= n and linkage[child - n, 2] == height:
                out.extend(kids.pop(child))
            else:
                out.append(child)
        kids[node] = out
    return kids


def _subtree(kids: dict[int, list[int]], root: int, n: int) -> list[int]:
    order, queue = [], deque([root])
    while queue:
        node = queue.popleft()
        order.append(node)
        if node >= n:
            queue.extend(kids[node])
    return order


def condense_tree(linkage: np.ndarray, min_cluster_size: int) -> np.ndarray:
    """Condensed cluster tree as rows ``(parent, child, lambda, child_size)``.

    Cluster labels start at ``n`` (the root); point ids are ``0..n-1``.
    """
    n = len(linkage) + 1
    root = 2 * n - 2
    kids = _multiway_children(linkage, n)
    relabel = {root: n}
    next_label = n + 1
    rows: list[tuple[int, int, float, int]] = []

    def size_of(node):
        return 1 if node < n else int(linkage[node - n, 3])

    queue = deque([root])
    while queue:
        node = queue.popleft()
        dist = linkage[node - n, 2]
        lam = 1.0 / dist if dist > 0 else np.inf
        parent_label = relabel[node]
        children = kids[node]
        big = [c for c in children if size_of(c) >= min_cluster_size]
        for child in children:
            if child in big:
                continue
            for sub in _subtree(kids, child, n):
                if sub < n:
                    rows.append((parent_label, sub, lam, 1))
        if len(big) == 1:
            relabel[big[0]] = parent_label
            queue.append(big[0])
        elif len(big) > 1:
            for child in big:
                relabel[child] = next_label
                rows.append((parent_label, next_label, lam, size_of(child)))
                next_label += 1
                queue.append(child)
    return np.array(rows, dtype=float).reshape(-1, 4)


def _stabilities(tree: np.ndarray, n: int) -> dict[int, float]:
    parents = tree[:, 0].astype(np.intp)
    children = tree[:, 1].astype(np.intp)
    birth = {n: 0.0}
    for c, lam in zip(children, tree[:, 2]):
        if c >= n:
            birth[int(c)] = lam
    stability = {c: 0.0 for c in birth}
    for p, lam, sz in zip(parents, tree[:, 2], tree[:, 3]):
        stability[int(p)] += (lam - birth[int(p)]) * sz
    return stability


def excess_of_mass(tree: np.ndarray, n: int, allow_single_cluster: bool = False) -> list[int]:
    """Select clusters from the condensed tree maximising total stability."""
    stability = _stabilities(tree, n)
    cluster_rows = tree[tree[:, 1] >= n]
    kids: dict[int, list[int]] = {c: [] for c in stability}
    for p, c in cluster_rows[:, :2].astype(np.intp):
        kids[int(p)].append(int(c))
    nodes = sorted(stability, reverse=True)
    if not allow_single_cluster:
        nodes = [c for c in nodes if c != n]
    selected = {c: True for c in nodes}
    for node in nodes:
        child_sum = sum(stability[c] for c in kids[node])
        if child_sum > stability[node]:
            selected[node] = False
            stability[node] = child_sum
        else:
            stack = list(kids[node])
            while stack:
                d = stack.pop()
                selected[d] = False
                stack.extend(kids[d])
    return sorted(c for c, keep in selected.items() if keep)


def _label_points(tree, clusters, n):
    parent = np.arange(int(tree[:, :2].max()) + 1 if len(tree) else n + 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = set(clusters)
    for p, c in tree[:, :2].astype(np.intp):
        if c not in chosen:
            parent[find(c)] = find(p)
    labels = np.full(n, NOISE, dtype=np.intp)
    for i in range(n):
        root = find(i)
        if root in chosen:
            labels[i] = root
    return labels


def _probabilities(tree, labels, n):
    point_lambda = np.zeros(n)
    pts = tree[tree[:, 1] < n]
    point_lambda[pts[:, 1].astype(np.intp)] = pts[:, 2]
    deaths: dict[int, float] = {}
    for p, lam in zip(tree[:, 0].astype(np.intp), tree[:, 2]):
        deaths[int(p)] = max(deaths.get(int(p), 0.0), lam)
    probs = np.zeros(n)
    for i in range(n):
        c = int(labels[i])
        if c == NOISE:
            continue
        top = deaths.get(c, 0.0)
        lam = point_lambda[i]
        if top == 0 or not np.isfinite(lam) or lam >= top:
            probs[i] = 1.0
        else:
            probs[i] = lam / top
    return probs


def hdbscan_array(X: np.ndarray, params: HdbscanParams) -> tuple[np.ndarray, np.ndarray]:
    """Cluster the rows of ``X``; returns ``(labels, probabilities)``.

    Labels are dense ``0..k-1`` numbered by first appearance in row order;
    ``-1`` marks noise. Fewer rows than ``min_cluster_size`` yields all noise.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < 2:
        raise ValueError("HDBSCAN needs at least two points")
    if n < params.min_cluster_size:
        return np.full(n, NOISE, dtype=np.intp), np.zeros(n)
    k = params.k
    if n < k:
        raise ValueError(f"{n} points but min_samples={k}")
    dist = cdist(X, X)
    mreach = mutual_reachability(dist, core_distances(dist, k))
    positive = mreach[mreach > 0]
    # coincident core points would give infinite lambda; floor the distance
    floor = positive.min() / 2 if positive.size else 1.0
    mreach = np.maximum(mreach, floor)
    np.fill_diagonal(mreach, 0.0)
    linkage = single_linkage(minimum_spanning_tree(mreach), n)
    tree = condense_tree(linkage, params.min_cluster_size)
    clusters = excess_of_mass(tree, n)
    raw = _label_points(tree, clusters, n)
    probs = _probabilities(tree, raw, n)
    labels = np.full(n, NOISE, dtype=np.intp)
    mapping: dict[int, int] = {}
    for i, c in enumerate(raw):
        if c == NOISE:
            continue
        labels[i] = mapping.setdefault(int(c), len(mapping))
    return labels, probs


def hdbscan(points: VectorTable, params: HdbscanParams) -> ClusterResult:
    labels, probs = hdbscan_array(points.matrix, params)
    count = int(labels.max()) + 1 if len(labels) and labels.max() >= 0 else 0
    return ClusterResult(points.keywords, labels, probs, count)


def top_keywords(cluster: ClusterResult, corpus: Sequence, cluster_id: int, k: int = 20) -> list[str]:
    """The ``k`` most frequent member keywords over the corpus, ties broken lexicographically."""
    members = cluster.members(cluster_id)
    if not members:
        raise ValueError(f"cluster {cluster_id} is empty or unknown")
    member_set = set(members)
    counts = Counter(kw for a in corpus for kw in a.keywords if kw in member_set)
    ranked = sorted(members, key=lambda kw: (-counts[kw], kw))
    return ranked[:k]


def write_cluster_dump(result: ClusterResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["keyword", "cluster_id", "probability"])
        for kw, lab, p in zip(result.keywords, result.labels, result.probabilities):
            w.writerow([kw, int(lab), repr(float(p))])


def read_cluster_dump(path: str | Path) -> ClusterResult:
    kws, labs, probs = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            kws.append(row["keyword"])
            labs.append(int(row["cluster_id"]))
            probs.append(float(row["probability"]))
    labels = np.array(labs, dtype=np.intp)
    count = int(labels.max()) + 1 if len(labels) and labels.max() >= 0 else 0
    return ClusterResult(tuple(kws), labels, np.array(probs), count)
