"""Exact simulation of the vertex-reinforced random walk.

The pair ``(Y, S)`` is a Markov chain: from vertex ``y`` the walk moves to
``j`` with probability proportional to ``R[y, j] * S[j]`` and then
increments ``S[j]``.  Each step consumes exactly one uniform draw, which is
mapped to a vertex by inverse-CDF over the cumulative weights.  Streams are
numpy ``Philox`` generators keyed by a ``SeedSequence``; trajectory ``k``
of a Monte Carlo run with master seed ``m`` uses the seed returned by
``derive_seed(m, k)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import EmptyList, VRRWError
from .model import LikelihoodMatrix, simplex_point, validate

CHUNK = 1 << 16


@numba.njit(cache=True)
def _advance(R, counts, y, uniforms):
    d = counts.shape[0]
    cum = np.empty(d)
    for t in range(uniforms.shape[0]):
        total = 0.0
        for j in range(d):
            total += R[y, j] * counts[j]
            cum[j] = total
        target = uniforms[t] * total
        nxt = -1
        for j in range(d):
            if target < cum[j]:
                nxt = j
                break
        if nxt < 0:
            # u * total rounded up to total: take the last vertex with weight
            for j in range(d - 1, -1, -1):
                if R[y, j] * counts[j] > 0.0:
                    nxt = j
                    break
        counts[nxt] += 1.0
        y = nxt
    return y


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit seed for trajectory ``index``, hashed from ``(master_seed, index)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class WalkState:
    """Current vertex ``y`` and visit counts ``counts`` (one plus visits by default)."""

    y: int
    counts: np.ndarray

    @property
    def n(self) -> float:
        return float(self.counts.sum())

    @property
    def occupation(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    def copy(self) -> WalkState:
        return WalkState(self.y, self.counts.copy())


def step_distribution(R, y: int, counts) -> np.ndarray:
    """Law of the next vertex from ``y`` given the counts."""
    w = np.asarray(R, dtype=float)[y] * np.asarray(counts, dtype=float)
    return w / w.sum()


def step(state: WalkState, R, rng: np.random.Generator) -> WalkState:
    """Advance ``state`` in place by one transition and return it."""
    r = np.ascontiguousarray(np.asarray(R, dtype=float))
    state.y = int(_advance(r, state.counts, state.y, rng.random(1)))
    return state


@dataclass
class WalkConfig:
    R: LikelihoodMatrix
    horizon: int
    initial_counts: np.ndarray | None = None
    initial_vertex: int = 0
    checkpoints: list[float] | None = None

    def __post_init__(self):
        self.R = validate(self.R)
        d = self.R.d
        if self.initial_counts is None:
            self.initial_counts = np.ones(d)
        self.initial_counts = np.array(self.initial_counts, dtype=float)
        if self.initial_counts.shape != (d,) or not np.all(self.initial_counts > 0):
            raise VRRWError("initial counts must be d positive numbers")
        if not 0 <= self.initial_vertex < d:
            raise VRRWError(f"initial vertex {self.initial_vertex} out of range")
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise VRRWError("horizon must be a nonnegative integer")
        self.horizon = int(self.horizon)
        if self.checkpoints is not None:
            times = list(self.checkpoints)
            if any(b <= a for a, b in zip(times, times[1:])):
                raise VRRWError("checkpoint times must be strictly increasing")

    @property
    def n0(self) -> float:
        return float(self.initial_counts.sum())

    def checkpoint_steps(self) -> list[int]:
        """Step counts at which occupation vectors are recorded.

        Times are on the ``n = sum(S)`` clock; each time maps to the first
        step at which ``n`` reaches it.  Step 0 and the horizon are always
        included.
        """
        n0, d = self.n0, self.R.d
        if self.checkpoints is None:
            times, k = [], 0
            while True:
                t = math.ceil(d * 1.2**k)
                if t > n0 + self.horizon:
                    break
                times.append(t)
                k += 1
        else:
            times = self.checkpoints
        steps = {0, self.horizon}
        for t in times:
            s = max(0, math.ceil(t - n0))
            if s <= self.horizon:
                steps.add(s)
        return sorted(steps)

    def to_dict(self) -> dict:
        return {
            "R": self.R.tolist(),
            "horizon": self.horizon,
            "initial_counts": self.initial_counts.tolist(),
            "initial_vertex": self.initial_vertex,
            "checkpoints": None if self.checkpoints is None else list(self.checkpoints),
        }


@dataclass
class Trajectory:
    seed: int
    times: np.ndarray
    occupations: np.ndarray
    final: WalkState
    config: WalkConfig | None = field(default=None, repr=False)

    @property
    def final_occupation(self) -> np.ndarray:
        return self.occupations[-1]

    def at_time(self, n: float) -> np.ndarray:
        """Occupation recorded at the first checkpoint with time >= ``n``."""
        k = int(np.searchsorted(self.times, n - 1e-9))
        if k >= len(self.times):
            raise KeyError(f"no checkpoint at or after n = {n}")
        return self.occupations[k]

    def write_csv(self, path) -> None:
        write_path_csv(path, "n", self.times, self.occupations)
        meta = {"seed": self.seed, "final_vertex": self.final.y}
        if self.config is not None:
            meta["config"] = self.config.to_dict()
        Path(path).with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def write_path_csv(path, time_name: str, times, points) -> None:
    points = np.asarray(points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([time_name] + [f"v_{i + 1}" for i in range(points.shape[1])])
        for t, row in zip(times, points):
            w.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in row])


def run(config: WalkConfig, seed: int) -> Trajectory:
    """Simulate one trajectory; identical ``(config, seed)`` give identical output."""
    rng = make_rng(seed)
    r = np.ascontiguousarray(config.R.entries)
    counts = config.initial_counts.copy()
    y = config.initial_vertex
    steps = config.checkpoint_steps()
    times = np.empty(len(steps))
    occupations = np.empty((len(steps), config.R.d))
    done = 0
    for k, target in enumerate(steps):
        while done < target:
            m = min(CHUNK, target - done)
            y = _advance(r, counts, y, rng.random(m))
            done += m
        times[k] = config.n0 + done
        occupations[k] = simplex_point(counts / counts.sum())
    return Trajectory(int(seed), times, occupations, WalkState(int(y), counts), config)


def distance_to_set(v, points) -> tuple[int, float]:
    """Index of and Euclidean distance to the nearest of ``points`` (lowest index on ties)."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise EmptyList("no points to compare against")
    pts = pts.reshape(len(pts), -1)
    dist = np.sqrt(((pts - np.asarray(v, dtype=float)) ** 2).sum(axis=1))
    k = int(np.argmin(dist))
    return k, float(dist[k])
