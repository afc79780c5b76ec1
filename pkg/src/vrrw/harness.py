"""Experiment configuration and the analyze / simulate / flow / montecarlo / spectra runs."""

from __future__ import annotations

import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import analysis, flow, model, walk
from .errors import VRRWError
from .linalg import sym_eigen

MODES = ("analyze", "simulate", "flow", "montecarlo", "spectra")


# Matrix sources ---------------------------------------------------------

def parse_matrix(source) -> tuple[model.LikelihoodMatrix, dict]:
    """Build R from a config value and return it with a normalized description.

    Accepted forms: a list of rows; ``"example2"``; ``"complete:D"``;
    ``"ones:D"``; ``"cayley:N:g1,g2,..."``; or a dict such as
    ``{"generator": "cayley", "n": 5, "T": [1, 4]}`` or ``{"rows": [...]}``.
    """
    if isinstance(source, str):
        name, *args = source.strip().split(":")
        try:
            if name == "example2" and not args:
                source = {"generator": "example2"}
            elif name in ("complete", "ones") and len(args) == 1:
                source = {"generator": name, "d": int(args[0])}
            elif name == "cayley" and len(args) == 2:
                source = {"generator": "cayley", "n": int(args[0]),
                          "T": [int(g) for g in args[1].split(",") if g]}
            else:
                raise VRRWError(f"unknown matrix source {source!r}")
        except ValueError as exc:
            if isinstance(exc, VRRWError):
                raise
            raise VRRWError(f"bad matrix source {source!r}: {exc}") from None
    elif isinstance(source, (list, tuple)):
        source = {"rows": source}
    if not isinstance(source, dict):
        raise VRRWError("matrix must be a list of rows, a name, or an object")

    gen = source.get("generator")
    try:
        if gen is None and "rows" in source:
            R = model.validate(source["rows"])
            return R, {"rows": R.tolist()}
        if gen == "example2":
            return model.example2(), {"generator": "example2"}
        if gen in ("complete", "ones"):
            d = int(source["d"])
            return getattr(model, gen)(d), {"generator": gen, "d": d}
        if gen == "cayley":
            n, T = int(source["n"]), sorted(int(g) % int(source["n"]) for g in source["T"])
            return analysis.cayley_matrix(n, T), {"generator": "cayley", "n": n, "T": T}
    except VRRWError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise VRRWError(f"bad matrix specification {source!r}: {exc}") from None
    raise VRRWError(f"unknown matrix generator {gen!r}")


# Config -----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    matrix: object = None
    mode: str | None = None
    horizon: int = 10_000
    trajectories: int = 1
    seed: int | None = None
    r_class: float = 0.05
    out: str | None = None
    workers: int = 1
    initial_counts: list[float] | None = None
    initial_vertex: int = 0
    checkpoints: list[float] | None = None
    initial: list[float] | None = None
    h: float = 0.01
    s_max: float = 50.0
    flow_tol: float = 1e-10
    tol: float = analysis.DEFAULT_TOL

    def __post_init__(self):
        if self.mode is not None and self.mode not in MODES:
            raise VRRWError(f"mode must be one of {MODES}")
        if not 0 < self.r_class < 0.5:
            raise VRRWError("r_class must lie in (0, 0.5)")
        if int(self.trajectories) < 1:
            raise VRRWError("trajectory count must be at least 1")
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise VRRWError("horizon must be a nonnegative integer")
        self.horizon = int(self.horizon)
        self.trajectories = int(self.trajectories)
        if self.matrix is None:
            raise VRRWError("no matrix given")

    @classmethod
    def load(cls, path=None, **overrides) -> ExperimentConfig:
        """Read a JSON config file (optional) and apply non-None overrides."""
        values: dict = {}
        if path is not None:
            try:
                values = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise VRRWError(f"cannot read config {path}: {exc}") from None
            if not isinstance(values, dict):
                raise VRRWError("config file must hold a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise VRRWError(f"unknown config keys: {sorted(unknown)}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def build_matrix(self):
        return parse_matrix(self.matrix)


def _out_dir(config: ExperimentConfig) -> Path | None:
    if config.out is None:
        return None
    path = Path(config.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dump_json(obj, path=None) -> str:
    """Serialize with round-trip exact floats (non-finite values become null)."""
    text = json.dumps(_json_ready(obj), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


# analyze ----------------------------------------------------------------

def run_analyze(config: ExperimentConfig, stream=sys.stdout) -> analysis.CriticalSetReport:
    R, source = config.build_matrix()
    report = analysis.critical_points(R, config.tol)
    if stream is not None:
        print(format_report(report), file=stream)
    out = _out_dir(config)
    if out is not None:
        dump_json({"matrix": source, **report.to_dict()}, out / "report.json")
    return report


def format_report(report: analysis.CriticalSetReport) -> str:
    lines = [f"{len(report.points)} critical point(s), d = {report.d}"]
    for k, cp in enumerate(report.points):
        coords = ", ".join(f"{x:.6g}" for x in cp.point)
        mark = " *" if k in report.predicted_limits else ""
        lines.append(f"  [{k}] ({coords})  lambda={cp.lam:.6g}  {cp.tag.value}{mark}")
    if report.degenerate_faces:
        lines.append(f"  degenerate faces: {[list(f) for f in report.degenerate_faces]}")
    lines.append(f"  C0 empty: {report.c0_empty}")
    if report.converges_almost_surely:
        lines.append("  V(n) converges almost surely to a point of the critical set")
    for w in report.warnings:
        lines.append(f"  warning: {w}")
    lines.append("  (* = positive-probability limit)")
    return "\n".join(lines)


# simulate ---------------------------------------------------------------

def _walk_config(config: ExperimentConfig, R) -> walk.WalkConfig:
    return walk.WalkConfig(
        R, config.horizon, config.initial_counts, config.initial_vertex, config.checkpoints
    )


def run_simulate(config: ExperimentConfig, stream=sys.stdout) -> walk.Trajectory:
    R, _ = config.build_matrix()
    seed = 0 if config.seed is None else config.seed
    traj = walk.run(_walk_config(config, R), seed)
    if stream is not None:
        final = ", ".join(f"{x:.6g}" for x in traj.final_occupation)
        print(f"seed {seed}: V({traj.times[-1]:.0f}) = ({final})", file=stream)
    out = _out_dir(config)
    if out is not None:
        traj.write_csv(out / "trajectory.csv")
    return traj


# flow -------------------------------------------------------------------

def run_flow(config: ExperimentConfig, stream=sys.stdout) -> flow.FlowResult:
    R, _ = config.build_matrix()
    start = model.barycenter(R.d) if config.initial is None else config.initial
    report = analysis.critical_points(R, config.tol)
    result = flow.integrate(
        flow.FlowConfig(R, start, config.h, config.s_max, config.flow_tol), report
    )
    if stream is not None:
        limit = ", ".join(f"{x:.6g}" for x in result.limit)
        status = "converged" if result.converged else "not converged"
        print(f"s = {result.s[-1]:.4g} ({status}): V = ({limit})", file=stream)
        if result.nearest_index >= 0:
            cp = report.points[result.nearest_index]
            print(f"nearest critical point [{result.nearest_index}] at distance "
                  f"{result.nearest_distance:.3g}: {cp.tag.value}", file=stream)
    out = _out_dir(config)
    if out is not None:
        result.write_csv(out / "flow.csv")
    return result


# montecarlo -------------------------------------------------------------

@dataclass
class MonteCarloSummary:
    matrix: dict
    horizon: int
    trajectories: int
    master_seed: int
    r_class: float
    points: list[dict]
    hits: list[int]
    unresolved: int
    seeds: list[int]
    finals: np.ndarray
    assigned: list[int]
    nearest_distance: list[float]
    limit_set_distance: list[float]
    timestamp: str = field(default="", compare=False)

    @property
    def estimates(self) -> list[dict]:
        out = []
        for h in self.hits:
            ci = binomtest(h, self.trajectories).proportion_ci(0.95, method="wilson")
            out.append({"p": h / self.trajectories, "low": ci.low, "high": ci.high})
        return out

    def hits_by_tag(self) -> dict[str, int]:
        tally: dict[str, int] = {}
        for pt, h in zip(self.points, self.hits):
            tally[pt["tag"]] = tally.get(pt["tag"], 0) + h
        return tally

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("finals")
        d["estimates"] = self.estimates
        return d

    def write(self, out: Path) -> None:
        dump_json(self.to_dict(), out / "summary.json")
        with open(out / "trajectories.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            d = self.finals.shape[1]
            w.writerow(["trajectory", "seed", "assigned", "nearest_distance", "limit_set_distance"]
                       + [f"v_{i + 1}" for i in range(d)])
            for k in range(self.trajectories):
                w.writerow([k, self.seeds[k], self.assigned[k],
                            f"{self.nearest_distance[k]:.17g}", f"{self.limit_set_distance[k]:.17g}"]
                           + [f"{x:.17g}" for x in self.finals[k]])


def _final_occupation(args) -> np.ndarray:
    wconfig, seed = args
    return walk.run(wconfig, seed).final_occupation


def simulate_finals(wconfig: walk.WalkConfig, seeds, workers: int = 1) -> np.ndarray:
    """Final occupation vectors for each seed, optionally across processes."""
    final_only = walk.WalkConfig(
        wconfig.R, wconfig.horizon, wconfig.initial_counts, wconfig.initial_vertex, []
    )
    jobs = [(final_only, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            finals = list(pool.map(_final_occupation, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        finals = [_final_occupation(j) for j in jobs]
    return np.array(finals)


def run_montecarlo(config: ExperimentConfig, stream=sys.stdout) -> MonteCarloSummary:
    if config.seed is None:
        raise VRRWError("montecarlo needs an explicit --seed")
    R, source = config.build_matrix()
    report = analysis.critical_points(R, config.tol)
    if not report.points:
        raise VRRWError("no isolated critical points to classify against")
    seeds = [walk.derive_seed(config.seed, k) for k in range(config.trajectories)]
    finals = simulate_finals(_walk_config(config, R), seeds, config.workers)

    locations = report.locations()
    hits = [0] * len(report.points)
    assigned, nearest, limit_dist = [], [], []
    for v in finals:
        k, dist = walk.distance_to_set(v, locations)
        nearest.append(dist)
        limit_dist.append(analysis.distance_to_limit_set(R, v, report))
        if dist <= config.r_class:
            hits[k] += 1
            assigned.append(k)
        else:
            assigned.append(-1)

    summary = MonteCarloSummary(
        matrix=source,
        horizon=config.horizon,
        trajectories=config.trajectories,
        master_seed=config.seed,
        r_class=config.r_class,
        points=[{"point": cp.point.tolist(), "tag": cp.tag.value} for cp in report.points],
        hits=hits,
        unresolved=assigned.count(-1),
        seeds=seeds,
        finals=finals,
        assigned=assigned,
        nearest_distance=nearest,
        limit_set_distance=limit_dist,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    if stream is not None:
        print(format_summary(summary), file=stream)
    out = _out_dir(config)
    if out is not None:
        summary.write(out)
    return summary


def format_summary(s: MonteCarloSummary) -> str:
    lines = [f"{s.trajectories} trajectories, horizon {s.horizon}, master seed {s.master_seed}, "
             f"r_class {s.r_class}"]
    for k, (pt, h, est) in enumerate(zip(s.points, s.hits, s.estimates)):
        coords = ", ".join(f"{x:.4g}" for x in pt["point"])
        lines.append(f"  [{k}] ({coords}) {pt['tag']}: {h} hits, "
                     f"p = {est['p']:.3f} [{est['low']:.3f}, {est['high']:.3f}]")
    lines.append(f"  unresolved: {s.unresolved}")
    return "\n".join(lines)


# spectra ----------------------------------------------------------------

def run_spectra(config: ExperimentConfig, stream=sys.stdout) -> dict:
    R, source = config.build_matrix()
    if source.get("generator") != "cayley":
        raise VRRWError("spectra needs a cayley matrix source")
    n, T = source["n"], source["T"]
    characters = analysis.cayley_spectrum(n, T)
    matrix_eigs = sym_eigen(R).eigenvalues
    residual = float(np.abs(np.sort(characters)[::-1] - matrix_eigs).max())
    nontrivial = characters[1:]
    tol = config.tol
    if np.any(nontrivial > tol):
        verdict = "barycenter unstable"
    elif np.all(nontrivial < -tol):
        verdict = "barycenter stable"
    else:
        verdict = "inconclusive: zero eigenvalue"
    result = {
        "matrix": source,
        "character_sums": characters.tolist(),
        "matrix_eigenvalues": matrix_eigs.tolist(),
        "residual": residual,
        "verdict": verdict,
    }
    if stream is not None:
        print(f"Cayley graph of Z_{n}, T = {T}", file=stream)
        print(f"  {'k':>3}  {'character sum':>15}", file=stream)
        for k, lam in enumerate(characters):
            print(f"  {k:>3}  {lam:>15.10f}", file=stream)
        print(f"  matrix eigenvalues: {', '.join(f'{x:.10f}' for x in matrix_eigs)}", file=stream)
        print(f"  max residual: {residual:.3g}", file=stream)
        print(f"  verdict: {verdict}", file=stream)
    out = _out_dir(config)
    if out is not None:
        dump_json(result, out / "spectra.json")
    return result


RUNNERS = {
    "analyze": run_analyze,
    "simulate": run_simulate,
    "flow": run_flow,
    "montecarlo": run_montecarlo,
    "spectra": run_spectra,
}
