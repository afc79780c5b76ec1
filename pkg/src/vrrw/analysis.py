"""Critical set of ``H`` on the simplex and stability classification.

A point ``v`` is critical iff ``pi(v) = v``, equivalently the local field
``N = R v`` is constant on the support of ``v``.  On a face ``F`` whose
principal submatrix ``R_F`` is invertible the only candidate in the relative
interior is the normalization of ``R_F^{-1} (1, ..., 1)``, so the critical
set is found by visiting all ``2^d - 1`` faces.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from .errors import InternalError, NotGenerating, NotInterior, NotSymmetricSet, Singular, SpectralMismatch
from .linalg import is_irreducible, solve_linear, sym_eigen
from .model import (
    ZERO_H,
    Face,
    LikelihoodMatrix,
    frozen_chain_irreducible,
    local_field,
    lyapunov,
    pi_map,
    simplex_point,
    validate,
)

DEFAULT_TOL = 1e-9
CRITICAL_TOL = 1e-8


class Tag(str, enum.Enum):
    LOCAL_MAXIMUM = "LocalMaximum"
    INTERIOR_UNSTABLE = "InteriorUnstable"
    LINEAR_NON_MAXIMUM = "LinearNonMaximum"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class Classification:
    tag: Tag
    witnesses: dict = field(default_factory=dict)
    # set when the verdict relies on the within-face analysis of a boundary point
    extension: bool = False


@dataclass
class CriticalPoint:
    point: np.ndarray
    face: Face
    lam: float
    h_value: float
    classification: Classification | None = None

    @property
    def tag(self) -> Tag | None:
        return None if self.classification is None else self.classification.tag

    def to_dict(self) -> dict:
        c = self.classification
        return {
            "point": self.point.tolist(),
            "face": list(self.face),
            "lambda": self.lam,
            "H": self.h_value,
            "tag": None if c is None else c.tag.value,
            "witnesses": {} if c is None else c.witnesses,
            "extension": False if c is None else c.extension,
        }


@dataclass
class CriticalSetReport:
    d: int
    points: list[CriticalPoint]
    degenerate_faces: list[Face]
    c0_empty: bool
    c0_faces: list[Face]
    predicted_limits: list[int]

    @property
    def converges_almost_surely(self) -> bool:
        """Off-diagonal positivity plus invertible principal minors on every face of size >= 2."""
        return self.c0_empty and not self.degenerate_faces

    @property
    def warnings(self) -> list[str]:
        out = []
        if self.degenerate_faces:
            out.append(
                "degenerate faces (singular R_F): the critical set may contain "
                "continua, where the point-limit theorems say nothing"
            )
        if not self.c0_empty:
            out.append("degeneracy set C0 is nonempty (some off-diagonal R_ij = 0)")
        return out

    def count(self, tag: Tag) -> int:
        return sum(1 for cp in self.points if cp.tag == tag)

    def locations(self) -> np.ndarray:
        return np.array([cp.point for cp in self.points]).reshape(len(self.points), self.d)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "points": [cp.to_dict() for cp in self.points],
            "degenerate_faces": [list(f) for f in self.degenerate_faces],
            "c0_empty": self.c0_empty,
            "c0_faces": [list(f) for f in self.c0_faces],
            "predicted_limits": list(self.predicted_limits),
            "corollary": "converges almost surely" if self.converges_almost_surely else None,
            "warnings": self.warnings,
        }


def faces(d: int):
    """All nonempty faces, smallest first, lexicographic within a size."""
    for size in range(1, d + 1):
        yield from combinations(range(d), size)


def is_critical(R, v, tol: float = CRITICAL_TOL) -> bool:
    """``||pi(v) - v||_inf <= tol``.

    Where ``H(v) = 0`` (a vertex with a zero diagonal entry, say) pi is
    undefined and the equal-field characterization on the support is used.
    """
    v = np.asarray(v, dtype=float)
    n = local_field(R, v)
    if not float(v @ n) > ZERO_H:
        return float(np.ptp(n[v > 0])) <= tol
    return float(np.abs(pi_map(R, v) - v).max()) <= tol


def c0_empty(R) -> bool:
    r = np.asarray(R, dtype=float)
    off = ~np.eye(r.shape[0], dtype=bool)
    return bool(np.all(r[off] > 0))


def reducible_faces(R) -> list[Face]:
    """Faces whose relative interior lies in the degeneracy set C0."""
    r = np.asarray(R, dtype=float)
    return [
        f for f in faces(r.shape[0])
        if len(f) > 1 and not is_irreducible(r[np.ix_(f, f)] > 0)
    ]


def stability_spectrum(R, p) -> np.ndarray:
    """Eigenvalues of ``diag(p) R / lambda`` on the tangent space ``sum(w) = 0``.

    ``p`` must be an interior critical point.  The spectrum is computed from
    the symmetric conjugate ``diag(p)^1/2 R diag(p)^1/2 / lambda`` after removing
    the eigenvalue-1 pair whose eigenvector is ``sqrt(p)``.  Returned in
    descending order, length ``d - 1``.
    """
    p = np.asarray(getattr(p, "point", p), dtype=float)
    if np.any(p <= 0):
        raise NotInterior("stability spectrum needs all p_i > 0")
    r = np.asarray(R, dtype=float)
    lam = lyapunov(r, p)
    if not lam > 0:
        raise NotInterior("lambda must be positive")
    root = np.sqrt(p)
    spec = sym_eigen(root[:, None] * r * root[None, :] / lam)
    align = np.abs(spec.eigenvectors.T @ (root / np.linalg.norm(root)))
    return np.delete(spec.eigenvalues, int(np.argmax(align)))


def classify(R, cp: CriticalPoint, tol: float = DEFAULT_TOL) -> Classification:
    """Stability verdict for one critical point.

    Order of tests: an outside-face direction with ``N_k > lambda + tol``
    makes a linear non-maximum; an interior point with a positive tangent
    eigenvalue is unstable (cross-checked against the positive-eigenvalue count
    of ``R``); all tangent eigenvalues and outside margins below ``-tol``
    make a strict local maximum of ``H``; anything else is inconclusive.
    """
    r = np.asarray(R, dtype=float)
    d = r.shape[0]
    face = list(cp.face)
    outside = [k for k in range(d) if k not in cp.face]
    n = local_field(r, cp.point)
    margins = n[outside] - cp.lam

    if outside and margins.max() > tol:
        j = int(np.argmax(margins))
        return Classification(
            Tag.LINEAR_NON_MAXIMUM, {"k": outside[j], "margin": float(margins[j])}
        )

    if len(face) > 1:
        spectrum = stability_spectrum(r[np.ix_(face, face)], cp.point[face])
    else:
        spectrum = np.empty(0)
    top = float(spectrum.max()) if spectrum.size else None
    top_margin = float(margins.max()) if outside else None

    if len(face) == d:
        r_spec = sym_eigen(r)
        r_pos = int(np.count_nonzero(r_spec.eigenvalues > tol))
        t_pos = int(np.count_nonzero(spectrum > tol))
        if r_pos - 1 != t_pos:
            near_zero = (np.abs(r_spec.eigenvalues) <= 100 * tol * max(1.0, abs(r_spec.eigenvalues).max())).any() \
                or (np.abs(spectrum) <= 100 * tol).any()
            if not near_zero:
                raise SpectralMismatch(
                    f"R has {r_pos} positive eigenvalues but the tangent spectrum has {t_pos}"
                )
            return Classification(
                Tag.INCONCLUSIVE, {"max_face_eigenvalue": top, "positive_eigenvalues_R": r_pos}
            )
        if t_pos:
            return Classification(
                Tag.INTERIOR_UNSTABLE, {"eigenvalue": top, "positive_eigenvalues_R": r_pos}
            )
    elif top is not None and top > tol:
        return Classification(
            Tag.INCONCLUSIVE,
            {"max_face_eigenvalue": top, "max_outside_margin": top_margin,
             "note": "unstable within its face"},
            extension=True,
        )

    if (top is None or top < -tol) and (top_margin is None or top_margin < -tol):
        return Classification(
            Tag.LOCAL_MAXIMUM,
            {"max_face_eigenvalue": top, "max_outside_margin": top_margin},
            extension=len(face) not in (1, d),
        )
    return Classification(
        Tag.INCONCLUSIVE, {"max_face_eigenvalue": top, "max_outside_margin": top_margin}
    )


def critical_points(R, tol: float = DEFAULT_TOL) -> CriticalSetReport:
    """Enumerate and classify the isolated critical points face by face.

    Faces of size >= 2 with a singular ``R_F`` are reported in
    ``degenerate_faces`` instead of being searched.
    """
    R = validate(R)
    r = R.entries
    d = R.d
    points: list[CriticalPoint] = []
    degenerate: list[Face] = []
    for face in faces(d):
        idx = list(face)
        if len(face) == 1:
            weights = np.ones(1)
            lam = float(r[idx[0], idx[0]])
        else:
            try:
                x = solve_linear(r[np.ix_(idx, idx)], np.ones(len(face)))
            except Singular:
                degenerate.append(face)
                continue
            s = x.sum()
            if not s > 0:
                continue
            weights = x / s
            if not np.all(weights > tol):
                continue
            lam = 1.0 / s
        full = np.zeros(d)
        full[idx] = weights
        point = simplex_point(full)
        cp = CriticalPoint(point, face, lam, lyapunov(r, point))
        if not is_critical(r, point, CRITICAL_TOL):
            raise InternalError(f"candidate on face {face} is not a fixed point of pi")
        cp.classification = classify(r, cp, tol)
        points.append(cp)

    predicted = [
        k for k, cp in enumerate(points)
        if cp.tag == Tag.LOCAL_MAXIMUM and frozen_chain_irreducible(r, cp.point)
    ]
    return CriticalSetReport(d, points, degenerate, c0_empty(r), reducible_faces(r), predicted)


# Distance to the limit set ----------------------------------------------

def project_to_simplex(y) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-and-threshold)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, y.size + 1)
    rho = np.flatnonzero(u - css / ks > 0)[-1]
    return np.maximum(y - css[rho] / (rho + 1), 0.0)


def _distance_to_face(v: np.ndarray, face: Face) -> float:
    idx = list(face)
    inside = project_to_simplex(v[idx])
    rest = np.delete(v, idx)
    return float(np.sqrt(((v[idx] - inside) ** 2).sum() + (rest**2).sum()))


def _distance_to_degenerate_face(r: np.ndarray, v: np.ndarray, face: Face) -> float:
    """Distance from ``v`` to ``{x in face : (R x)_i equal for i in face}`` (a small QP)."""
    idx = list(face)
    sub = r[np.ix_(idx, idx)]
    target = v[idx]
    m = len(idx)
    start = np.append(project_to_simplex(target), 0.0)
    start[-1] = float((sub @ start[:m]).mean())
    res = minimize(
        lambda z: float(((z[:m] - target) ** 2).sum()),
        start,
        jac=lambda z: np.append(2.0 * (z[:m] - target), 0.0),
        method="SLSQP",
        bounds=[(0.0, None)] * m + [(None, None)],
        constraints=[
            {"type": "eq", "fun": lambda z: sub @ z[:m] - z[m]},
            {"type": "eq", "fun": lambda z: z[:m].sum() - 1.0},
        ],
        options={"ftol": 1e-14, "maxiter": 200},
    )
    z = res.x
    if np.abs(sub @ z[:m] - z[m]).max() > 1e-8 or abs(z[:m].sum() - 1) > 1e-8 or z[:m].min() < -1e-10:
        return math.inf
    rest = np.delete(v, idx)
    return float(np.sqrt(((z[:m] - target) ** 2).sum() + (rest**2).sum()))


def distance_to_limit_set(R, v, report: CriticalSetReport) -> float:
    """Euclidean distance from ``v`` to the critical set together with C0.

    Isolated points come from ``report``; critical sets on degenerate faces
    and the closed faces making up C0 are handled exactly.
    """
    r = np.asarray(R, dtype=float)
    v = np.asarray(v, dtype=float)
    best = math.inf
    if report.points:
        best = float(np.sqrt(((report.locations() - v) ** 2).sum(axis=1)).min())
    for f in report.c0_faces:
        best = min(best, _distance_to_face(v, f))
    for f in report.degenerate_faces:
        if best == 0.0:
            break
        best = min(best, _distance_to_degenerate_face(r, v, f))
    return best


# Cayley graphs of Z_n ---------------------------------------------------

def _generator_set(n: int, generators) -> list[int]:
    if n < 1:
        raise NotGenerating("n must be positive")
    gens = sorted({int(g) % n for g in generators})
    for g in gens:
        if (-g) % n not in gens:
            raise NotSymmetricSet(f"generator {g} has no inverse {(-g) % n} in the set")
    if n > 1 and (not gens or math.gcd(n, *gens) != 1):
        raise NotGenerating(f"{gens} does not generate Z_{n}")
    return gens


def cayley_matrix(n: int, generators) -> LikelihoodMatrix:
    """Incidence matrix of the Cayley graph of Z_n: ``R_ij = 1`` iff ``j - i`` is a generator."""
    gens = _generator_set(n, generators)
    i, j = np.indices((n, n))
    return validate(np.isin((j - i) % n, gens).astype(float))


def cayley_spectrum(n: int, generators) -> np.ndarray:
    """Character sums ``sum_g cos(2 pi k g / n)`` for ``k = 0, ..., n - 1``."""
    gens = np.array(_generator_set(n, generators), dtype=float)
    k = np.arange(n)[:, None]
    return np.cos(2.0 * np.pi * k * gens[None, :] / n).sum(axis=1)
