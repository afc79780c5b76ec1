import io
import json

import numpy as np
import pytest

from vrrw import cli, harness, model
from vrrw.errors import VRRWError
from vrrw.harness import ExperimentConfig, parse_matrix


@pytest.mark.parametrize("source, d", [
    ("example2", 3), ("complete:4", 4), ("ones:2", 2), ("cayley:5:1,4", 5),
    ([[1, 2], [2, 1]], 2), ({"rows": [[1.0]]}, 1),
    ({"generator": "cayley", "n": 6, "T": [1, 5]}, 6),
])
def test_parse_matrix_forms(source, d):
    R, norm = parse_matrix(source)
    assert R.d == d
    R2, norm2 = parse_matrix(norm)
    assert R2 == R and norm2 == norm


@pytest.mark.parametrize("source", ["nope", "complete:x", "cayley:5:1", 7, {"generator": "zz"},
                                    {"generator": "complete"}, [[1, 2], [3, 1]]])
def test_parse_matrix_errors(source):
    with pytest.raises(VRRWError):
        parse_matrix(source)


def test_config_load_and_overrides(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"matrix": "example2", "horizon": 500, "seed": 3}))
    cfg = ExperimentConfig.load(p, horizon=None, trajectories=4)
    assert (cfg.horizon, cfg.seed, cfg.trajectories) == (500, 3, 4)
    p.write_text(json.dumps({"matrix": "example2", "bogus": 1}))
    with pytest.raises(VRRWError):
        ExperimentConfig.load(p)
    for bad in ({"r_class": 0.5}, {"trajectories": 0}, {"horizon": -1}, {"mode": "x"}):
        with pytest.raises(VRRWError):
            ExperimentConfig(matrix="example2", **bad)
    with pytest.raises(VRRWError):
        ExperimentConfig()


def test_dump_json_nonfinite():
    text = harness.dump_json({"a": float("nan"), "b": [float("inf"), 0.1]})
    assert json.loads(text) == {"a": None, "b": [None, 0.1]}


def test_analyze_example2(tmp_path):
    report = harness.run_analyze(ExperimentConfig(matrix="example2", out=str(tmp_path)), stream=None)
    assert len(report.points) == 7
    counts = {t.value: report.count(t) for t in harness.analysis.Tag}
    assert counts == {"LocalMaximum": 2, "InteriorUnstable": 1, "LinearNonMaximum": 4, "Inconclusive": 0}
    data = json.loads((tmp_path / "report.json").read_text())
    assert len(data["points"]) == 7


def test_analyze_prints_warnings():
    buf = io.StringIO()
    harness.run_analyze(ExperimentConfig(matrix="ones:3"), stream=buf)
    out = buf.getvalue()
    assert "degenerate" in out.lower()


def test_analyze_complete4():
    report = harness.run_analyze(ExperimentConfig(matrix="complete:4"), stream=None)
    assert len(report.points) == 15
    assert report.count(harness.analysis.Tag.LOCAL_MAXIMUM) == 1


def test_simulate_and_flow_outputs(tmp_path):
    traj = harness.run_simulate(ExperimentConfig(matrix="example2", horizon=200, out=str(tmp_path)), stream=None)
    assert traj.times[-1] == 203
    assert (tmp_path / "trajectory.csv").exists()
    res = harness.run_flow(ExperimentConfig(matrix="complete:3", out=str(tmp_path)), stream=None)
    np.testing.assert_allclose(res.limit, 1 / 3)
    assert (tmp_path / "flow.csv").read_text().startswith("s,v_1,v_2,v_3")


def _mc(tmp_path=None, **kw):
    cfg = dict(matrix="example2", horizon=2000, trajectories=12, seed=7)
    cfg.update(kw)
    if tmp_path is not None:
        cfg["out"] = str(tmp_path)
    return harness.run_montecarlo(ExperimentConfig(**cfg), stream=None)


def test_montecarlo_deterministic(tmp_path):
    a, b = _mc(tmp_path / "a"), _mc(tmp_path / "b")
    da = json.loads((tmp_path / "a" / "summary.json").read_text())
    db = json.loads((tmp_path / "b" / "summary.json").read_text())
    da.pop("timestamp"), db.pop("timestamp")
    assert da == db
    assert (tmp_path / "a" / "trajectories.csv").read_bytes() == (tmp_path / "b" / "trajectories.csv").read_bytes()
    np.testing.assert_array_equal(a.finals, b.finals)


def test_montecarlo_workers_match_serial():
    serial, parallel = _mc(), _mc(workers=2)
    np.testing.assert_array_equal(serial.finals, parallel.finals)


def test_montecarlo_classification_consistent():
    s = _mc()
    assert sum(s.hits) + s.unresolved == s.trajectories
    locations = np.array([p["point"] for p in s.points])
    for v, k, dist in zip(s.finals, s.assigned, s.nearest_distance):
        nearest = int(np.argmin(np.linalg.norm(locations - v, axis=1)))
        assert dist == pytest.approx(np.linalg.norm(locations[nearest] - v))
        assert k == (nearest if dist <= s.r_class else -1)
    tags = s.hits_by_tag()
    assert sum(tags.values()) == sum(s.hits)
    for est, h in zip(s.estimates, s.hits):
        assert est["low"] <= h / s.trajectories <= est["high"]


def test_montecarlo_requires_seed():
    with pytest.raises(VRRWError):
        harness.run_montecarlo(ExperimentConfig(matrix="example2"), stream=None)


@pytest.mark.parametrize("n, T, verdict", [
    (3, [1, 2], "barycenter stable"),
    (5, [1, 4], "barycenter unstable"),
    (4, [1, 3], "inconclusive: zero eigenvalue"),
])
def test_spectra_verdicts(n, T, verdict):
    res = harness.run_spectra(ExperimentConfig(matrix={"generator": "cayley", "n": n, "T": T}), stream=None)
    assert res["verdict"] == verdict
    assert res["residual"] < 1e-10


def test_spectra_needs_cayley():
    with pytest.raises(VRRWError):
        harness.run_spectra(ExperimentConfig(matrix="example2"), stream=None)


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["analyze", "--matrix", "example2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "report.json").exists()
    assert cli.main(["analyze", "--matrix", "complete:x"]) == 2
    assert cli.main(["montecarlo", "--matrix", "example2"]) == 2
    assert cli.main(["flow", "--matrix", "example2", "--initial", "0.2,0.4,0.4", "--h", "10"]) == 2
    assert cli.main(["spectra", "--matrix", "cayley:5:1,4", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "spectra.json").read_text())["verdict"] == "barycenter unstable"
    capsys.readouterr()


def test_cli_acceptance_failure_code(monkeypatch):
    from vrrw import acceptance

    failing = acceptance.CriterionResult(0, "stub", False, "forced", 0.0, 1.0)
    monkeypatch.setattr(acceptance, "run_all", lambda only=None: [failing])
    assert cli.main(["acceptance"]) == 3


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"matrix": [[2, 1], [1, 2]], "seed": 1, "horizon": 100}))
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "trajectory.meta.json").read_text())
    assert meta["seed"] == 1


def test_generator_roundtrip():
    R = model.example2()
    _, norm = parse_matrix({"rows": R.tolist()})
    assert parse_matrix(norm)[0] == R
