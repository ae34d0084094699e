"""Weighted graph construction from feature matrices.

The main builder aggregates leaf co-occurrence over a forest of random
projection trees: points sharing a leaf in ``count`` of ``T`` trees get
an edge of weight ``count / T``. Baselines: exact k-nearest-neighbor
(union-symmetrized, unit weights), the Gaussian heat kernel, and the
self-tuning kernel with per-point bandwidths.

Edges live in a dict keyed by unordered pairs ``(i, j)`` with ``i < j``;
self-loops are never stored (the GCN normalization adds its own).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import GraphError
from .linalg import as_matrix
from .rptree import RpTree, build_tree, leaves

KERNEL_PRUNE_THRESHOLD = 1e-12


@dataclass
class WeightedGraph:
    n: int
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def to_dense(self) -> np.ndarray:
        """Symmetric adjacency matrix with zero diagonal."""
        a = np.zeros((self.n, self.n))
        for (i, j), w in self.edges.items():
            a[i, j] = w
            a[j, i] = w
        return a

    def neighbor_lists(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def degrees(self) -> np.ndarray:
        """Weighted degree of each node."""
        d = np.zeros(self.n)
        for (i, j), w in self.edges.items():
            d[i] += w
            d[j] += w
        return d


def _check_edge_key(n: int, i: int, j: int) -> tuple[int, int]:
    if not (0 <= i < n and 0 <= j < n):
        raise GraphError(f"edge ({i},{j}) out of range for n={n}")
    if i == j:
        raise GraphError(f"self-loop ({i},{i}) is not allowed")
    return (i, j) if i < j else (j, i)


def make_graph(n: int, edges=None) -> WeightedGraph:
    """Build a graph from ``(i, j, w)`` triples, validating each edge."""
    g = WeightedGraph(n=n)
    for i, j, w in edges or ():
        key = _check_edge_key(n, int(i), int(j))
        w = float(w)
        if not (w > 0.0) or not np.isfinite(w):
            raise GraphError(f"edge {key} has invalid weight {w}")
        g.edges[key] = w
    return g


def forest_tree_seed(seed: int, t: int) -> int:
    """Seed for the ``t``-th tree of a forest rooted at ``seed``.

    Derived from the pair, not from ``seed + t``, so that forests with
    the same root seed share their first trees: extending a forest never
    rewrites the trees already built (edge sets nest as T grows).
    """
    ss = np.random.SeedSequence([int(seed), int(t)])
    return int(ss.generate_state(1, np.uint64)[0])


def build_rpforest_trees(
    X, T: int, max_leaf_size: int, seed: int, split_rule: str = "quantile"
) -> list[RpTree]:
    if T < 1:
        raise GraphError(f"tree count must be >= 1, got {T}")
    return [
        build_tree(X, max_leaf_size, forest_tree_seed(seed, t), split_rule)
        for t in range(T)
    ]


def _leaf_pair_codes(indices: np.ndarray, n: int) -> np.ndarray:
    """Each unordered pair in a leaf as the integer ``i * n + j`` (i < j)."""
    idx = np.sort(np.asarray(indices, dtype=np.int64))
    if idx.size < 2:
        return np.empty(0, dtype=np.int64)
    ii, jj = np.triu_indices(idx.size, k=1)
    return idx[ii] * n + idx[jj]


def aggregate_leaf_partitions(partitions, n: int, T: int | None = None) -> WeightedGraph:
    """Co-occurrence graph from per-tree leaf partitions.

    ``partitions`` is one sequence of leaf index sets per tree. A pair of
    points co-occurring in ``count`` trees gets weight ``count / T``
    (``T`` defaults to the number of partitions given).
    """
    partitions = list(partitions)
    if T is None:
        T = len(partitions)
    if T < 1:
        raise GraphError(f"tree count must be >= 1, got {T}")
    codes = [
        _leaf_pair_codes(leaf, n) for partition in partitions for leaf in partition
    ]
    g = WeightedGraph(n=n)
    if codes:
        all_codes = np.concatenate(codes)
        uniq, counts = np.unique(all_codes, return_counts=True)
        for code, count in zip(uniq.tolist(), counts.tolist()):
            g.edges[(code // n, code % n)] = count / T
    return g


def build_rpforest_graph(
    X, T: int, max_leaf_size: int, seed: int, split_rule: str = "quantile"
) -> WeightedGraph:
    """Leaf co-occurrence graph over a forest of ``T`` projection trees."""
    X = as_matrix(X, "X")
    trees = build_rpforest_trees(X, T, max_leaf_size, seed, split_rule)
    return aggregate_leaf_partitions([leaves(tree) for tree in trees], X.shape[0], T)


def _pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    return squareform(pdist(X, metric="sqeuclidean"))


def knn_indices(X: np.ndarray, k: int) -> np.ndarray:
    """Exact k nearest neighbors of each row (self excluded), by full sort.

    Distance ties resolve to the lower index, making the result
    deterministic.
    """
    dists = cdist(X, X)
    np.fill_diagonal(dists, np.inf)
    order = np.argsort(dists, axis=1, kind="stable")
    return order[:, :k]


def build_knn_graph(X, k: int) -> WeightedGraph:
    """Unit-weight k-nn graph, symmetrized by union.

    An edge (i, j) exists when j is among i's k nearest neighbors or
    vice versa, so degrees can exceed k.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    if not (1 <= k < n):
        raise GraphError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    nbrs = knn_indices(X, k)
    g = WeightedGraph(n=n)
    for i in range(n):
        for j in nbrs[i]:
            key = (i, int(j)) if i < j else (int(j), i)
            g.edges[key] = 1.0
    return g


def build_heat_kernel_graph(X, sigma: float) -> WeightedGraph:
    """Gaussian kernel graph: w(i,j) = exp(-d^2(i,j) / (2 sigma^2))."""
    X = as_matrix(X, "X")
    if not sigma > 0:
        raise GraphError(f"sigma must be > 0, got {sigma}")
    w = np.exp(-_pairwise_sq_dists(X) / (2.0 * sigma * sigma))
    return _graph_from_kernel(w)


def build_self_tuning_graph(X, K: int = 7) -> WeightedGraph:
    """Self-tuning kernel graph: w(i,j) = exp(-d^2(i,j) / (sigma_i sigma_j)).

    ``sigma_i`` is the distance from point i to its K-th nearest
    neighbor. Zero bandwidths (duplicate-heavy data) are replaced by the
    smallest positive bandwidth in the dataset.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    if not (1 <= K < n):
        raise GraphError(f"K must satisfy 1 <= K < n, got K={K}, n={n}")
    sq = _pairwise_sq_dists(X)
    dists = np.sqrt(sq)
    np.fill_diagonal(dists, np.inf)
    sigma = np.sort(dists, axis=1)[:, K - 1]
    if (sigma == 0.0).any():
        positive = sigma[sigma > 0.0]
        if positive.size == 0:
            raise GraphError("all self-tuning bandwidths are zero (all points identical)")
        sigma = np.where(sigma == 0.0, positive.min(), sigma)
    w = np.exp(-sq / np.outer(sigma, sigma))
    return _graph_from_kernel(w)


def _graph_from_kernel(w: np.ndarray, prune: float = KERNEL_PRUNE_THRESHOLD) -> WeightedGraph:
    n = w.shape[0]
    g = WeightedGraph(n=n)
    ii, jj = np.triu_indices(n, k=1)
    keep = w[ii, jj] >= prune
    for i, j, wij in zip(ii[keep].tolist(), jj[keep].tolist(), w[ii[keep], jj[keep]].tolist()):
        g.edges[(i, j)] = wij
    return g


def add_complement_edges(g: WeightedGraph, percent: float, weight: float, seed: int = 0) -> WeightedGraph:
    """Return a copy of ``g`` plus a random sample of its missing edges.

    ``percent`` of the absent unordered pairs (rounded down) are added at
    the given weight; sampling is uniform and deterministic per seed.
    """
    if not (0.0 <= percent <= 100.0):
        raise GraphError(f"percent must be in [0, 100], got {percent}")
    if not weight > 0:
        raise GraphError(f"weight must be > 0, got {weight}")
    n = g.n
    present = np.zeros((n, n), dtype=bool)
    for i, j in g.edges:
        present[i, j] = True
    ii, jj = np.triu_indices(n, k=1)
    absent = ~present[ii, jj]
    comp_i, comp_j = ii[absent], jj[absent]
    m = int(percent / 100.0 * comp_i.size)
    out = WeightedGraph(n=n, edges=dict(g.edges))
    if m == 0:
        return out
    rng = np.random.default_rng(seed)
    picked = rng.choice(comp_i.size, size=m, replace=False)
    picked.sort()
    for i, j in zip(comp_i[picked].tolist(), comp_j[picked].tolist()):
        out.edges[(i, j)] = float(weight)
    return out


def total_weight(g: WeightedGraph, matrix_sum: bool = False) -> float:
    """Sum of edge weights, each unordered pair counted once.

    With ``matrix_sum=True`` each pair counts twice, matching the plain
    sum over a symmetric adjacency matrix.
    """
    s = float(sum(g.edges.values()))
    return 2.0 * s if matrix_sum else s


def connected_components(g: WeightedGraph) -> tuple[np.ndarray, int]:
    """Breadth-first component labels (0-based) and the component count."""
    adj = g.neighbor_lists()
    labels = np.full(g.n, -1, dtype=np.int64)
    comp = 0
    for start in range(g.n):
        if labels[start] >= 0:
            continue
        labels[start] = comp
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if labels[v] < 0:
                    labels[v] = comp
                    queue.append(v)
        comp += 1
    return labels, comp


def save_edge_list(g: WeightedGraph, path) -> None:
    """Write ``n=<count>`` then one ``i,j,w`` line per edge (i < j, sorted).

    Weights are written with ``repr``, which round-trips float64 exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={g.n}\n")
        for (i, j) in sorted(g.edges):
            fh.write(f"{i},{j},{g.edges[(i, j)]!r}\n")


def load_edge_list(path) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise GraphError(f"{path}: expected header 'n=<count>', got {header!r}")
        try:
            n = int(header[2:])
        except ValueError:
            raise GraphError(f"{path}: bad node count in header {header!r}") from None
        triples = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise GraphError(f"{path}: line {line_no}: expected 'i,j,w', got {line!r}")
            triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return make_graph(n, triples)
