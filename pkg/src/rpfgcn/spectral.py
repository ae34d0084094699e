"""Spectral connectivity diagnostics for tuning the forest size.

The eigenvector of a graph Laplacian at its smallest eigenvalue is
constant exactly when the graph has one connected component, so the
standard deviation of that eigenvector's entries works as a
connectivity probe: near zero for connected graphs, clearly positive
otherwise. Sweeping the tree count T of a forest graph and watching
that probe fall gives an elbow at the T where the graph first connects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import graph as graphmod
from .errors import GraphError, SpectralError
from .linalg import as_matrix, sym_eig
from .rptree import build_tree, leaves

# A smallest-eigenvector std below this means "connected". It sits well
# above the eigensolver residual (~1e-8) and far below the 1/sqrt(n)
# reading an actual disconnected graph produces.
CONNECT_THRESHOLD = 1e-6

# Eigenvalues below this count as zero when counting components spectrally.
ZERO_EIGENVALUE_TOL = 1e-8


class SweepPoint(NamedTuple):
    T: int
    std_v0: float
    components: int


@dataclass(frozen=True)
class SweepCurve:
    points: list[SweepPoint]
    dataset: str
    seed: int


@dataclass(frozen=True)
class Elbow:
    t_star: int
    connected: bool  # False: never connected, t_star is the sharpest kink


def graph_laplacian(g: graphmod.WeightedGraph, normalized: bool = False) -> np.ndarray:
    """Unnormalized ``L = D - A`` or symmetric-normalized ``I - D^-1/2 A D^-1/2``.

    The normalized form is undefined for isolated nodes and raises
    ``GraphError`` naming the first one.
    """
    a = g.to_dense()
    deg = a.sum(axis=1)
    if not normalized:
        return np.diag(deg) - a
    isolated = np.flatnonzero(deg == 0.0)
    if isolated.size:
        raise GraphError(
            f"normalized Laplacian undefined: node {int(isolated[0])} is isolated (degree 0)"
        )
    inv_sqrt = 1.0 / np.sqrt(deg)
    return np.eye(g.n) - (inv_sqrt[:, None] * a) * inv_sqrt[None, :]


def smallest_eigenvector(L) -> tuple[float, np.ndarray]:
    """Eigenpair at the minimal eigenvalue, sign-fixed.

    The returned unit vector has its first non-negligible component
    positive, so repeated calls agree on orientation.
    """
    L = as_matrix(L, "L")
    w, v = sym_eig(L)
    v0 = v[:, 0].copy()
    nonzero = np.flatnonzero(np.abs(v0) > 1e-12 * max(np.abs(v0).max(), 1e-300))
    if nonzero.size and v0[nonzero[0]] < 0:
        v0 = -v0
    return float(w[0]), v0


def _diagnose(g: graphmod.WeightedGraph) -> tuple[float, int]:
    """(std of smallest eigenvector, BFS component count).

    With two or more components the zero eigenspace is degenerate and the
    eigensolver's choice of v0 is arbitrary, so the probe short-circuits:
    any unit vector of that eigenspace orthogonal to the constant vector
    has entry std exactly 1/sqrt(n), and that value is reported.
    """
    if g.n == 1:
        return 0.0, 1
    _, ncomp = graphmod.connected_components(g)
    if ncomp > 1:
        return float(1.0 / np.sqrt(g.n)), ncomp
    _, v0 = smallest_eigenvector(graph_laplacian(g, normalized=False))
    return float(v0.std()), 1


def connectivity_std(g: graphmod.WeightedGraph) -> float:
    """Std of the smallest Laplacian eigenvector's entries (see _diagnose)."""
    return _diagnose(g)[0]


def sweep_trees(
    X,
    T_values,
    max_leaf_size: int,
    seed: int,
    split_rule: str = "quantile",
    dataset: str = "",
) -> SweepCurve:
    """Connectivity probe across forest sizes with nested tree seeds.

    Trees are built once with per-tree seeds derived from ``(seed, t)``
    and co-occurrence counts accumulate incrementally, so the graph at a
    larger T contains every edge of the graph at a smaller T.
    """
    X = as_matrix(X, "X")
    ts = [int(t) for t in T_values]
    if not ts:
        raise SpectralError("T_values must be non-empty")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise SpectralError(f"T_values must be strictly increasing, got {ts}")
    if ts[0] < 1:
        raise SpectralError(f"tree counts must be >= 1, got {ts[0]}")
    n = X.shape[0]
    points: list[SweepPoint] = []
    code_chunks: list[np.ndarray] = []
    built = 0
    for T in ts:
        while built < T:
            tree = build_tree(
                X, max_leaf_size, graphmod.forest_tree_seed(seed, built), split_rule
            )
            code_chunks.extend(
                graphmod._leaf_pair_codes(leaf, n) for leaf in leaves(tree)
            )
            built += 1
        g = graphmod.WeightedGraph(n=n)
        if code_chunks:
            codes = np.concatenate(code_chunks)
            uniq, counts = np.unique(codes, return_counts=True)
            for code, count in zip(uniq.tolist(), counts.tolist()):
                g.edges[(code // n, code % n)] = count / T
        std, ncomp = _diagnose(g)
        points.append(SweepPoint(T=T, std_v0=std, components=ncomp))
    return SweepCurve(points=points, dataset=dataset, seed=int(seed))


def detect_elbow(curve: SweepCurve, connect_threshold: float = CONNECT_THRESHOLD) -> Elbow:
    """Smallest T whose probe value is below the connect threshold.

    If the curve never drops below the threshold, fall back to the T with
    the largest discrete second difference (the sharpest kink) and flag
    the result as not connected.
    """
    pts = curve.points
    if len(pts) < 3:
        raise SpectralError(f"elbow detection needs >= 3 sweep points, got {len(pts)}")
    for p in pts:
        if p.std_v0 < connect_threshold:
            return Elbow(t_star=p.T, connected=True)
    s = [p.std_v0 for p in pts]
    second = [s[i - 1] - 2.0 * s[i] + s[i + 1] for i in range(1, len(s) - 1)]
    kink = int(np.argmax(second)) + 1
    return Elbow(t_star=pts[kink].T, connected=False)


def write_sweep_csv(curve: SweepCurve, path) -> None:
    """CSV with header ``T,std_v0,components``, one row per sweep point."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("T,std_v0,components\n")
        for p in curve.points:
            fh.write(f"{p.T},{float(p.std_v0)!r},{p.components}\n")
