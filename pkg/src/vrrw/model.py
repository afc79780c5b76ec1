"""Core objects of the reinforced walk: the likelihood matrix and simplex maps.

Indices are 0-based throughout.  For an occupation vector ``v`` and a
symmetric nonnegative matrix ``R``:

* ``N(v) = R v``          local field
* ``H(v) = v . R v``      Lyapunov function
* ``pi(v) = v * N / H``   stationary law of the frozen chain ``M(v)``
* ``M_ij(v) = R_ij v_j / N_i``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    Asymmetric,
    EmptyFace,
    NegativeEntry,
    NotOnSimplex,
    UndefinedRow,
    VRRWError,
    ZeroColumn,
    ZeroH,
)
from .linalg import as_square, is_irreducible

SIMPLEX_TOL = 1e-12
SYMMETRY_TOL = 1e-12
ZERO_H = 1e-300

Face = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class LikelihoodMatrix:
    """A validated symmetric nonnegative matrix with positive column sums.

    Build it with :func:`validate`.  Supports ``np.asarray(R)``.
    """

    entries: np.ndarray

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, LikelihoodMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def submatrix(self, face: Face) -> np.ndarray:
        idx = list(face)
        return self.entries[np.ix_(idx, idx)]

    def tolist(self) -> list[list[float]]:
        return self.entries.tolist()


def validate(raw) -> LikelihoodMatrix:
    """Check ``raw`` and return it as a :class:`LikelihoodMatrix`.

    Entries asymmetric by at most ``1e-12`` (relative to the largest entry)
    are symmetrized by averaging; anything worse is rejected.
    """
    if isinstance(raw, LikelihoodMatrix):
        return raw
    r = as_square(raw)
    gap = np.abs(r - r.T)
    if gap.max() > SYMMETRY_TOL * max(1.0, float(np.abs(r).max())):
        i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
        raise Asymmetric(int(i), int(j), float(gap[i, j]))
    r = 0.5 * (r + r.T)
    neg = np.argwhere(r < 0)
    if neg.size:
        i, j = (int(k) for k in neg[0])
        raise NegativeEntry(i, j, float(r[i, j]))
    zero = np.flatnonzero(r.sum(axis=0) <= 0)
    if zero.size:
        raise ZeroColumn(int(zero[0]))
    r.setflags(write=False)
    return LikelihoodMatrix(r)


def _matrix(R) -> np.ndarray:
    return np.asarray(R, dtype=float)


def simplex_point(v, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Return ``v`` as a read-only probability vector.

    Coordinates must be nonnegative and sum to 1 within ``tol``; the result
    is renormalized to remove that residual.
    """
    p = np.array(v, dtype=float).reshape(-1)
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise NotOnSimplex("point must be a non-empty finite vector")
    if np.any(p < 0):
        raise NotOnSimplex(f"negative coordinate at index {int(np.argmin(p))}")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise NotOnSimplex(f"coordinates sum to {total!r}")
    p /= total
    p.setflags(write=False)
    return p


def barycenter(d: int) -> np.ndarray:
    return simplex_point(np.full(d, 1.0 / d))


def vertex(d: int, i: int) -> np.ndarray:
    e = np.zeros(d)
    e[i] = 1.0
    return simplex_point(e)


def local_field(R, v) -> np.ndarray:
    return _matrix(R) @ np.asarray(v, dtype=float)


def lyapunov(R, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ _matrix(R) @ v)


def pi_map(R, v) -> np.ndarray:
    """The reweighted point ``v_i N_i(v) / H(v)``."""
    v = np.asarray(v, dtype=float)
    n = local_field(R, v)
    h = float(v @ n)
    if not h > ZERO_H:
        raise ZeroH(f"H(v) = {h!r} vanishes")
    return v * n / h


def transition_matrix(R, v, strict: bool = True) -> np.ndarray:
    """The frozen-chain kernel ``M(v)``.

    Rows with ``N_i(v) = 0`` raise :class:`UndefinedRow` unless ``strict`` is
    false, in which case they are returned as NaN.
    """
    r = _matrix(R)
    v = np.asarray(v, dtype=float)
    n = r @ v
    undefined = n <= 0
    if strict and undefined.any():
        raise UndefinedRow(int(np.flatnonzero(undefined)[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        m = r * v[None, :] / n[:, None]
    m[undefined] = np.nan
    return m


def face_of(v, tol: float = 0.0) -> Face:
    if tol < 0:
        raise VRRWError("tol must be nonnegative")
    support = tuple(int(i) for i in np.flatnonzero(np.asarray(v) > tol))
    if not support:
        raise EmptyFace(f"no coordinate exceeds {tol!r}")
    return support


def frozen_chain_irreducible(R, v, tol: float = 0.0) -> bool:
    """Whether ``M(v)`` restricted to the support of ``v`` is irreducible.

    Points where this fails make up the degeneracy set.
    """
    face = list(face_of(v, tol))
    sub = _matrix(R)[np.ix_(face, face)]
    # M_ij > 0 iff R_ij > 0 when v_j > 0 and N_i > 0
    return is_irreducible(sub > 0)


def criticality_tests(
    R, v, tol: float = 1e-8, face_tol: float = SIMPLEX_TOL
) -> dict[str, bool | None]:
    """Evaluate the five equivalent characterizations of a critical point.

    Keys: ``derivative`` (D_v H(pi(v) - v) = 0), ``face_gradient`` (gradient of
    H restricted to face(v) vanishes), ``equal_field`` (N_i equal on the
    support), ``stationary`` (v is invariant for M(v), 0/0 = 0), ``fixed_point``
    (pi(v) = v).  Where H(v) = 0 the three tests that need pi or M are
    undefined and reported as None.
    """
    r = _matrix(R)
    v = np.asarray(v, dtype=float)
    n = r @ v
    face = list(face_of(v, face_tol))
    grad = 2.0 * n
    face_grad = grad[face] - grad[face].mean()
    result: dict[str, bool | None] = {
        "derivative": None,
        "face_gradient": float(np.abs(face_grad).max()) <= tol,
        "equal_field": float(np.ptp(n[face])) <= tol,
        "stationary": None,
        "fixed_point": None,
    }
    if not float(v @ n) > ZERO_H:
        return result

    pi = pi_map(r, v)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(n > 0, v / n, 0.0)
    # (vM)_i = sum_j v_j R_ji v_i / N_j
    moved = v * (r.T @ ratio)
    result["derivative"] = abs(float(grad @ (pi - v))) <= tol
    result["stationary"] = float(np.abs(moved - v).max()) <= tol
    result["fixed_point"] = float(np.abs(pi - v).max()) <= tol
    return result


# Named matrices ---------------------------------------------------------

EXAMPLE2 = ((3.0, 1.0, 1.0), (1.0, 2.0, 4.0), (1.0, 4.0, 2.0))


def example2() -> LikelihoodMatrix:
    """The 3x3 matrix with two attracting critical points."""
    return validate(EXAMPLE2)


def complete(d: int) -> LikelihoodMatrix:
    """``R_ij = 1 - delta_ij``: the complete graph without loops."""
    if d < 2:
        raise VRRWError("complete(d) needs d >= 2 (d = 1 has a zero column)")
    return validate(np.ones((d, d)) - np.eye(d))


def ones(d: int) -> LikelihoodMatrix:
    """All-ones matrix: the walk is a Polya urn."""
    if d < 1:
        raise VRRWError("d must be positive")
    return validate(np.ones((d, d)))
