"""Random projection trees.

A tree recursively splits point indices: each internal node projects its
points onto a random unit direction and sends the ones at or below a
random-quantile threshold to the left child. Recursion stops when a node
holds at most ``max_leaf_size`` points, or when no sampled direction can
separate them (duplicate-heavy data), in which case the leaf is kept as
is and flagged unsplittable.

Per-node RNG streams are derived from ``(seed, node_id)`` with node ids
laid out heap-style (root 1, children ``2*id`` and ``2*id + 1``), so the
tree a seed produces does not depend on traversal order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ShapeError
from .linalg import as_matrix

SPLIT_RULES = ("quantile", "median", "range")

# Fresh directions tried before a node is declared unsplittable.
MAX_SPLIT_ATTEMPTS = 4


@dataclass(frozen=True)
class Leaf:
    indices: np.ndarray  # sorted point indices
    unsplittable: bool = False


@dataclass(frozen=True)
class Internal:
    direction: np.ndarray  # unit vector, length d
    threshold: float
    left: "RpNode"
    right: "RpNode"


RpNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class RpTree:
    root: RpNode
    n: int
    max_leaf_size: int
    seed: int
    split_rule: str = "quantile"


def _node_rng(seed: int, node_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(node_id)]))


def project(X, indices, direction) -> np.ndarray:
    """Dot product of each selected row of ``X`` with ``direction``."""
    X = as_matrix(X, "X")
    direction = np.asarray(direction, dtype=np.float64)
    if direction.ndim != 1 or direction.shape[0] != X.shape[1]:
        raise ShapeError(
            f"direction has length {direction.shape}, expected ({X.shape[1]},)"
        )
    idx = np.asarray(indices, dtype=np.int64)
    return X[idx] @ direction


def _threshold(proj: np.ndarray, q: float, split_rule: str) -> float:
    if split_rule == "range":
        lo = float(proj.min())
        hi = float(proj.max())
        return lo + q * (hi - lo)
    # "median" is handled by forcing q = 0.5 before we get here.
    return float(np.quantile(proj, q))


def _build_node(X, indices, max_leaf_size, seed, node_id, split_rule) -> RpNode:
    if indices.shape[0] <= max_leaf_size:
        return Leaf(indices=np.sort(indices))
    rng = _node_rng(seed, node_id)
    d = X.shape[1]
    for _ in range(MAX_SPLIT_ATTEMPTS):
        direction = rng.standard_normal(d)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            continue
        direction /= norm
        proj = X[indices] @ direction
        q = 0.5 if split_rule == "median" else rng.uniform(0.25, 0.75)
        threshold = _threshold(proj, q, split_rule)
        go_left = proj <= threshold
        n_left = int(go_left.sum())
        if 0 < n_left < indices.shape[0]:
            left = _build_node(
                X, indices[go_left], max_leaf_size, seed, 2 * node_id, split_rule
            )
            right = _build_node(
                X, indices[~go_left], max_leaf_size, seed, 2 * node_id + 1, split_rule
            )
            return Internal(direction=direction, threshold=threshold, left=left, right=right)
    return Leaf(indices=np.sort(indices), unsplittable=True)


def build_tree(X, max_leaf_size: int, seed: int, split_rule: str = "quantile") -> RpTree:
    """Build a random projection tree over the rows of ``X``.

    ``split_rule`` picks how the threshold is placed on the projected
    values: ``"quantile"`` (random quantile in [0.25, 0.75], the default),
    ``"median"`` (fixed 0.5 quantile), or ``"range"`` (random fraction in
    [0.25, 0.75] of the projected min-max span).
    """
    X = as_matrix(X, "X")
    if max_leaf_size < 1:
        raise ShapeError(f"max_leaf_size must be >= 1, got {max_leaf_size}")
    if split_rule not in SPLIT_RULES:
        raise ShapeError(f"unknown split_rule {split_rule!r}, expected one of {SPLIT_RULES}")
    n = X.shape[0]
    indices = np.arange(n, dtype=np.int64)
    root = _build_node(X, indices, max_leaf_size, int(seed), 1, split_rule)
    return RpTree(root=root, n=n, max_leaf_size=max_leaf_size, seed=int(seed), split_rule=split_rule)


def leaves(tree: RpTree) -> list[np.ndarray]:
    """Leaf index sets in left-to-right order; they partition 0..n-1."""
    out: list[np.ndarray] = []
    stack: list[RpNode] = [tree.root]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            out.append(node.indices)
        else:
            # Push right first so left is popped (and emitted) first.
            stack.append(node.right)
            stack.append(node.left)
    return out
