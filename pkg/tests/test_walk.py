import json
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from vrrw import model, walk
from vrrw.analysis import critical_points
from vrrw.errors import EmptyList, VRRWError


def _draws(R, y, counts, n, seed=0):
    rng = walk.make_rng(seed)
    out = np.zeros(len(counts), dtype=int)
    for _ in range(n):
        s = walk.step(walk.WalkState(y, np.array(counts, dtype=float)), R, rng)
        out[s.y] += 1
    return out


def test_step_distribution(ex2):
    np.testing.assert_allclose(walk.step_distribution(ex2, 0, [1, 1, 1]), [0.6, 0.2, 0.2])
    np.testing.assert_allclose(walk.step_distribution(model.ones(3), 2, [1, 2, 5]), [1 / 8, 2 / 8, 5 / 8])


def test_one_step_law_chi_square(ex2):
    freq = _draws(ex2, 0, [1, 1, 1], 100_000)
    assert chisquare(freq, 100_000 * np.array([0.6, 0.2, 0.2])).pvalue > 1e-3


def test_one_step_law_at_uneven_counts():
    r = np.array([[1.0, 2.0, 0.5], [2.0, 0.0, 1.0], [0.5, 1.0, 3.0]])
    counts = [4.0, 1.5, 2.0]
    probs = walk.step_distribution(r, 2, counts)
    freq = _draws(r, 2, counts, 100_000, seed=3)
    assert chisquare(freq, 100_000 * probs).pvalue > 1e-3


def test_zero_weight_never_chosen():
    r = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
    assert _draws(r, 0, [1, 50, 1], 20_000)[1] == 0


def test_step_updates_state(ex2):
    state = walk.WalkState(0, np.ones(3))
    walk.step(state, ex2, walk.make_rng(1))
    assert state.n == 4
    assert state.counts[state.y] == 2


def _enumerated_s1_law(steps):
    # exact probabilities from the transition rule, one path at a time
    law = {}
    for path in product((0, 1), repeat=steps):
        counts = [Fraction(1), Fraction(1)]
        prob = Fraction(1)
        for j in path:
            prob *= counts[j] / sum(counts)
            counts[j] += 1
        law[int(counts[0])] = law.get(int(counts[0]), 0) + prob
    return law


def test_polya_exchangeability_by_enumeration():
    assert _enumerated_s1_law(3) == {k: Fraction(1, 4) for k in (1, 2, 3, 4)}
    # the implementation's step law reproduces the same path probabilities
    for path in product((0, 1), repeat=3):
        counts = np.ones(2)
        prob, exact = 1.0, Fraction(1)
        c = [1, 1]
        for j in path:
            prob *= walk.step_distribution(model.ones(2), 0, counts)[j]
            exact *= Fraction(c[j], sum(c))
            counts[j] += 1
            c[j] += 1
        assert prob == pytest.approx(float(exact), abs=1e-15)


def test_polya_sampled_s1_after_three_steps():
    config = walk.WalkConfig(model.ones(2), 3, checkpoints=[])
    s1 = [walk.run(config, walk.derive_seed(5, k)).final.counts[0] for k in range(8000)]
    freq = np.bincount(np.array(s1, dtype=int), minlength=5)[1:]
    assert chisquare(freq).pvalue > 1e-3


def test_horizon_zero():
    traj = walk.run(walk.WalkConfig(model.example2(), 0, initial_counts=[1, 2, 1]), 7)
    assert len(traj.times) == 1
    np.testing.assert_allclose(traj.occupations[0], [0.25, 0.5, 0.25])


def test_determinism(ex2):
    config = walk.WalkConfig(ex2, 5000)
    a, b = walk.run(config, 99), walk.run(config, 99)
    assert np.array_equal(a.occupations, b.occupations) and np.array_equal(a.times, b.times)
    assert a.final.y == b.final.y
    c = walk.run(config, 100)
    assert not np.array_equal(a.occupations, c.occupations)


def test_chunking_does_not_change_stream(ex2, monkeypatch):
    config = walk.WalkConfig(ex2, 3000)
    ref = walk.run(config, 4)
    monkeypatch.setattr(walk, "CHUNK", 7)
    assert np.array_equal(walk.run(config, 4).occupations, ref.occupations)


def test_run_matches_repeated_step(ex2):
    config = walk.WalkConfig(ex2, 500, checkpoints=[])
    traj = walk.run(config, 11)
    rng = walk.make_rng(11)
    state = walk.WalkState(0, np.ones(3))
    for _ in range(500):
        walk.step(state, ex2, rng)
    assert np.array_equal(state.counts, traj.final.counts) and state.y == traj.final.y


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2000))
def test_count_conservation(seed, k):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    a = rng.uniform(0, 1, (d, d))
    init = rng.integers(1, 5, size=d).astype(float)
    traj = walk.run(walk.WalkConfig((a + a.T) / 2, k, initial_counts=init), seed)
    assert traj.final.counts.sum() == init.sum() + k
    assert np.all(traj.final.counts >= init)
    assert np.all(np.diff(traj.times) > 0)
    np.testing.assert_allclose(traj.occupations.sum(axis=1), 1, atol=1e-12)


def test_default_checkpoints_geometric():
    config = walk.WalkConfig(model.complete(3), 100)
    steps = config.checkpoint_steps()
    times = [3 + s for s in steps]
    assert steps[0] == 0 and steps[-1] == 100
    assert times[:6] == [3, 4, 5, 6, 7, 8]
    assert all(b > a for a, b in zip(steps, steps[1:]))


def test_custom_checkpoints():
    traj = walk.run(walk.WalkConfig(model.complete(3), 1000, checkpoints=[10, 100, 1003]), 1)
    np.testing.assert_array_equal(traj.times, [3, 10, 100, 1003])
    np.testing.assert_array_equal(traj.at_time(100), traj.occupations[2])


def test_config_validation(ex2):
    with pytest.raises(VRRWError):
        walk.WalkConfig(ex2, 10, initial_counts=[1, 0, 1])
    with pytest.raises(VRRWError):
        walk.WalkConfig(ex2, 10, initial_vertex=3)
    with pytest.raises(VRRWError):
        walk.WalkConfig(ex2, 10, checkpoints=[5, 5])


def test_example1_strong_law():
    config = walk.WalkConfig(model.complete(3), 200_000, checkpoints=[])
    finals = np.array([walk.run(config, walk.derive_seed(1, k)).final_occupation for k in range(50)])
    assert np.median(np.abs(finals - 1 / 3).max(axis=1)) < 0.05


def test_distance_to_set(ex2):
    pts = critical_points(ex2).locations()
    assert walk.distance_to_set(pts[3], pts) == (3, 0.0)
    k, dist = walk.distance_to_set([0.45, 0.3, 0.25], pts)
    np.testing.assert_allclose(pts[k], [0.5, 0.25, 0.25])
    assert dist == pytest.approx(np.sqrt(0.05**2 * 2))
    assert walk.distance_to_set([0.2, 0.8], [[1.0, 0.0]])[0] == 0
    # ties go to the lower index
    assert walk.distance_to_set([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]])[0] == 0
    with pytest.raises(EmptyList):
        walk.distance_to_set([1.0], [])


def test_derive_seed():
    seeds = {walk.derive_seed(42, k) for k in range(100)}
    assert len(seeds) == 100 and all(0 <= s < 2**64 for s in seeds)
    assert walk.derive_seed(42, 3) == walk.derive_seed(42, 3)
    assert walk.derive_seed(42, 3) != walk.derive_seed(43, 3)


def test_csv_and_metadata(tmp_path, ex2):
    traj = walk.run(walk.WalkConfig(ex2, 50, checkpoints=[10, 53]), 3)
    path = tmp_path / "t.csv"
    traj.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,v_1,v_2,v_3"
    row = [float(x) for x in lines[-1].split(",")]
    assert row[0] == 53 and np.array_equal(row[1:], traj.final_occupation)
    meta = json.loads((tmp_path / "t.meta.json").read_text())
    assert meta["seed"] == 3 and meta["config"]["R"] == ex2.tolist()
