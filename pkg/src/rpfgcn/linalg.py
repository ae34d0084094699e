"""Dense float64 matrix helpers and a cyclic Jacobi symmetric eigensolver.

Everything works on plain 2-D ``numpy.ndarray`` objects in row-major
(C) order. The eigensolver is sized for graph Laplacians of up to a few
thousand nodes; the hot rotation loop is JIT-compiled with numba.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ConvergenceError, ShapeError

# Cyclic Jacobi stops once the off-diagonal Frobenius norm drops below
# JACOBI_OFF_TOL relative to the Frobenius norm of the input, or errors
# after JACOBI_MAX_SWEEPS full sweeps.
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-12

# Inputs whose max |M - M^T| entry exceeds this are rejected; anything
# closer is symmetrized as (M + M^T)/2 before decomposition.
SYMMETRY_TOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a contiguous 2-D float64 array with finite entries."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.size == 0:
        raise ShapeError(f"{name} must be non-empty, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ShapeError(f"{name} contains non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"inner dimensions differ: {a.shape[0]}x{a.shape[1]} @ {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


@njit(cache=True)
def _off_frobenius(a):
    n = a.shape[0]
    off = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            off += a[i, j] * a[i, j]
    return np.sqrt(2.0 * off)


@njit(cache=True)
def _jacobi_sweeps(a, vt, max_sweeps, tol):
    """Cyclic-by-row Jacobi rotations on ``a`` in place.

    ``vt`` accumulates the rotations row-wise (row i ends up as the i-th
    eigenvector); the caller transposes. Each rotation rewrites the two
    pivot rows contiguously and mirrors them into the columns, keeping
    the hot loops sequential in memory. Returns the number of completed
    sweeps, or -1 if the off-diagonal Frobenius norm never dropped below
    ``tol`` (an absolute target derived from the input scale).
    """
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = _off_frobenius(a)
        if off <= tol:
            return sweep
        # Rutishauser-style threshold: skip tiny pivots early on so the
        # first sweeps spend their time on the large entries.
        thresh = 0.2 * off / (n * n) if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * abs(apq)
                # Entries already negligible relative to the diagonal are
                # zeroed outright once the process has matured.
                if sweep > 3 and abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                if abs(apq) <= thresh:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + g == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                # Rotate rows p and q (contiguous), then restore symmetry
                # by mirroring them into the columns.
                for j in range(n):
                    apj = a[p, j]
                    aqj = a[q, j]
                    a[p, j] = c * apj - s * aqj
                    a[q, j] = s * apj + c * aqj
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    a[r, p] = a[p, r]
                    a[r, q] = a[q, r]
                for j in range(n):
                    vpj = vt[p, j]
                    vqj = vt[q, j]
                    vt[p, j] = c * vpj - s * vqj
                    vt[q, j] = s * vpj + c * vqj
    if _off_frobenius(a) <= tol:
        return max_sweeps
    return -1


def sym_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as the corresponding unit-norm columns. The input must be
    square and symmetric to within ``SYMMETRY_TOL``; it is symmetrized as
    ``(M + M^T)/2`` before decomposition.

    Raises ``ShapeError`` for non-square or asymmetric input and
    ``ConvergenceError`` if ``JACOBI_MAX_SWEEPS`` sweeps do not reach the
    off-diagonal tolerance.
    """
    m = as_matrix(m)
    n, ncols = m.shape
    if n != ncols:
        raise ShapeError(f"matrix must be square, got {n}x{ncols}")
    asym = np.max(np.abs(m - m.T))
    if asym > SYMMETRY_TOL:
        raise ShapeError(f"matrix is not symmetric: max |M - M^T| = {asym:.3e} > {SYMMETRY_TOL}")
    a = (m + m.T) / 2.0

    scale = np.sqrt(np.sum(a * a))
    tol = JACOBI_OFF_TOL * max(scale, 1e-300)
    vt = np.eye(n)
    sweeps = _jacobi_sweeps(a, vt, JACOBI_MAX_SWEEPS, tol)
    if sweeps < 0:
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps",
            iterations=JACOBI_MAX_SWEEPS,
        )
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], np.ascontiguousarray(vt[order].T)
