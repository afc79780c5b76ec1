"""Dense linear algebra for the small symmetric systems used by the analysis.

Matrices here are at most a few dozen rows, so the routines favour
robustness and transparency over speed: a cyclic Jacobi eigensolver,
Gaussian elimination with partial pivoting, and a reachability test for
strong connectivity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySupport, NoConvergence, NonSymmetric, Singular, VRRWError

MAX_SWEEPS = 100
SYMMETRY_RTOL = 1e-12
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a symmetric matrix.

    ``eigenvalues`` are sorted in descending order and ``eigenvectors[:, k]``
    is the unit eigenvector paired with ``eigenvalues[k]``.  ``signature`` is
    ``(n_pos, n_neg, n_zero)`` counted against ``tol``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    signature: tuple[int, int, int]
    tol: float


def as_square(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise VRRWError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise VRRWError("matrix has non-finite entries")
    return a


def inf_norm(m: np.ndarray) -> float:
    """Maximum absolute row sum."""
    return float(np.abs(m).sum(axis=1).max()) if m.size else 0.0


def signature(values, tol: float) -> tuple[int, int, int]:
    values = np.asarray(values, dtype=float)
    n_pos = int(np.count_nonzero(values > tol))
    n_neg = int(np.count_nonzero(values < -tol))
    return n_pos, n_neg, values.size - n_pos - n_neg


def sym_eigen(m, tol: float | None = None) -> Spectrum:
    """Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi.

    ``tol`` is the sign tolerance used for the signature; it defaults to
    ``1e-9`` times the spectral radius.  Raises ``NonSymmetric`` if ``m`` is
    not symmetric to a relative ``1e-12`` and ``NoConvergence`` if the
    off-diagonal mass does not vanish within 100 sweeps.
    """
    a = as_square(m)
    scale = inf_norm(a)
    if np.abs(a - a.T).max() > SYMMETRY_RTOL * scale:
        raise NonSymmetric("matrix is not symmetric")
    if tol is not None and tol <= 0:
        raise VRRWError("tol must be positive")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)

    off_mask = ~np.eye(n, dtype=bool)
    target = np.finfo(float).eps * np.sqrt(np.sum(a * a))
    for _ in range(MAX_SWEEPS):
        if not np.sqrt(np.sum(a[off_mask] ** 2)) > target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        if np.sqrt(np.sum(a[off_mask] ** 2)) > target:
            raise NoConvergence(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = v[:, order]
    if tol is None:
        tol = 1e-9 * float(np.abs(values).max(initial=0.0))
    return Spectrum(values, vectors, signature(values, tol), float(tol))


def solve_linear(m, rhs) -> np.ndarray:
    """Solve ``m @ x = rhs`` by Gaussian elimination with partial pivoting.

    A pivot smaller than ``1e-12 * ||m||_inf`` raises ``Singular``.
    """
    a = as_square(m)
    b = np.array(rhs, dtype=float).reshape(-1)
    n = a.shape[0]
    if b.shape[0] != n:
        raise VRRWError(f"rhs has length {b.shape[0]}, expected {n}")
    threshold = SINGULAR_RTOL * inf_norm(a)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if not abs(a[piv, k]) > threshold:
            raise Singular(f"pivot {k} is below {threshold:.3g}")
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(factors, a[k, k:])
        b[k + 1:] -= factors * b[k]
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            stack.append(int(j))
    return seen


def is_irreducible(support) -> bool:
    """True iff the directed graph with adjacency ``support`` is strongly connected."""
    adj = np.asarray(support, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise VRRWError("support must be a square boolean matrix")
    if adj.shape[0] == 0:
        raise EmptySupport("no index has positive mass")
    return bool(_reachable(adj, 0).all() and _reachable(adj.T, 0).all())
