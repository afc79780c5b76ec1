"""Mean-field flow of the occupation vector.

In the time variable ``s = log t`` the flow ``dV/dt = (pi(V) - V) / t``
becomes the autonomous field ``dV/ds = pi(V) - V``, integrated here with
classical fourth-order Runge-Kutta.  ``H`` is a Lyapunov function for the
field, so every step is checked for monotonicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .analysis import CriticalSetReport, critical_points
from .errors import NonMonotone, StepRejected, VRRWError, ZeroH
from .model import LikelihoodMatrix, lyapunov, simplex_point, validate
from .walk import distance_to_set, write_path_csv

CLIP = 1e-9
MONOTONE_TOL = 1e-9

_OK, _REJECTED, _NON_MONOTONE, _ZERO_H = 0, 1, 2, 3


@numba.njit(cache=True)
def _field(R, v, out):
    n = R @ v
    h = 0.0
    for i in range(v.shape[0]):
        h += v[i] * n[i]
    if not h > 1e-300:
        return False
    for i in range(v.shape[0]):
        out[i] = v[i] * n[i] / h - v[i]
    return True


@numba.njit(cache=True)
def _integrate(R, v0, h, max_steps, tol, path, hs):
    """Fill ``path``/``hs`` row by row; returns (status, steps taken, converged)."""
    d = v0.shape[0]
    v = v0.copy()
    k1 = np.empty(d)
    k2 = np.empty(d)
    k3 = np.empty(d)
    k4 = np.empty(d)
    path[0] = v
    hs[0] = v @ (R @ v)
    for n in range(max_steps):
        if not _field(R, v, k1):
            return _ZERO_H, n, False
        if np.abs(k1).max() < tol:
            return _OK, n, True
        if not _field(R, v + 0.5 * h * k1, k2):
            return _ZERO_H, n, False
        if not _field(R, v + 0.5 * h * k2, k3):
            return _ZERO_H, n, False
        if not _field(R, v + h * k3, k4):
            return _ZERO_H, n, False
        w = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for i in range(d):
            if w[i] < -CLIP:
                path[n + 1] = w
                return _REJECTED, n + 1, False
            if w[i] < 0.0:
                w[i] = 0.0
        w /= w.sum()
        v = w
        path[n + 1] = v
        hs[n + 1] = v @ (R @ v)
        if hs[n + 1] < hs[n] - MONOTONE_TOL:
            return _NON_MONOTONE, n + 1, False
    if not _field(R, v, k1):
        return _ZERO_H, max_steps, False
    return _OK, max_steps, np.abs(k1).max() < tol


@dataclass
class FlowConfig:
    R: LikelihoodMatrix
    initial: np.ndarray
    h: float = 0.01
    s_max: float = 50.0
    tol: float = 1e-10

    def __post_init__(self):
        self.R = validate(self.R)
        self.initial = simplex_point(self.initial)
        if self.initial.shape != (self.R.d,):
            raise VRRWError("initial point has the wrong dimension")
        if not self.h > 0 or not self.s_max > 0:
            raise VRRWError("step size and s_max must be positive")


@dataclass
class FlowResult:
    s: np.ndarray
    path: np.ndarray
    h_values: np.ndarray
    converged: bool
    nearest_index: int
    nearest_point: np.ndarray
    nearest_distance: float

    @property
    def limit(self) -> np.ndarray:
        return self.path[-1]

    def write_csv(self, path) -> None:
        write_path_csv(path, "s", self.s, self.path)


def integrate(config: FlowConfig, report: CriticalSetReport | None = None) -> FlowResult:
    """Integrate ``dV/ds = pi(V) - V`` until ``s_max`` or ``||pi(V) - V||_inf < tol``.

    Raises ``StepRejected`` if a step leaves the simplex by more than 1e-9
    and ``NonMonotone`` if ``H`` drops by more than 1e-9 in one step.
    Slightly negative coordinates are clipped to zero and the point is
    renormalized after every step.
    """
    r = np.ascontiguousarray(config.R.entries)
    if not lyapunov(r, config.initial) > 0:
        raise ZeroH("H vanishes at the initial point")
    max_steps = math.ceil(config.s_max / config.h - 1e-9)
    path = np.empty((max_steps + 1, config.R.d))
    hs = np.empty(max_steps + 1)
    status, steps, converged = _integrate(
        r, np.array(config.initial), config.h, max_steps, config.tol, path, hs
    )
    s = config.h * np.arange(steps + 1)
    if status == _REJECTED:
        raise StepRejected(
            f"step to s = {s[-1]:.4g} left the simplex ({path[steps].min():.3g}); reduce h"
        )
    if status == _NON_MONOTONE:
        raise NonMonotone(f"H decreased by {hs[steps - 1] - hs[steps]:.3g} at s = {s[-1]:.4g}")
    if status == _ZERO_H:
        raise ZeroH("H vanished along the path")

    path = path[: steps + 1]
    if report is None:
        report = critical_points(config.R)
    if report.points:
        k, dist = distance_to_set(path[-1], report.locations())
        nearest = report.points[k].point
    else:
        k, dist, nearest = -1, math.inf, np.full(config.R.d, np.nan)
    return FlowResult(s, path, hs[: steps + 1], bool(converged), k, nearest, dist)
