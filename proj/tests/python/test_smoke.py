import math

import pytest

import twinforge as tf


def test_aprbs_is_four_levels_on_5s_grid():
    s = tf.synth_aprbs(seed=4)
    assert len(s) == 281
    assert s.times[1] - s.times[0] == 5.0
    # cold start, then one plateau per level
    assert s.values[0] == 279.15
    assert len(set(s.values)) == 5


def test_simulation_and_kpis():
    g = tf.CuboidGrid()
    g.nx, g.ny, g.nz = 6, 4, 4
    r = tf.simulate(tf.synth_step(473.15, 0.0), g)
    assert len(r.T_A) == 281
    assert r.T_B[-1] > r.T_A[-1] > r.T_A[0]
    assert tf.crest_factor([0, 0, 0, 3]) == pytest.approx(2.0)


def test_statistics_examples():
    v = [0.5] * 3 + [1.5] * 2 + [2.5] * 3 + [3.5] * 2 + [4.5] * 3 + [5.5] * 2
    c = tf.chi2_uniformity(v, range=(0.0, 6.0))
    assert c.statistic == pytest.approx(0.6)
    assert c.p_value == pytest.approx(0.988, abs=5e-4)
    m = tf.error_measures([x + 2 for x in range(300, 330)], list(range(300, 330)))
    assert m.rmse == pytest.approx(2.0)
    assert tf.pearson([1, 2, 3], [5, 5, 5]) is None


def test_rom_rollout_and_errors(tmp_path):
    model = tf.RomModel(2, 8)
    model.initialize(1)
    model.set_parameters([0.01 * p for p in model.parameters()])
    u = tf.synth_aprbs(seed=2).values
    p = tf.rollout(model, u, 290.0, 300.0)
    assert len(p.T_A) == len(u)
    assert all(math.isfinite(x) for x in p.T_B)
    path = tmp_path / "m.json"
    tf.save_model(model, path)
    assert tf.load_model(path).parameters() == model.parameters()
    with pytest.raises(tf.DomainError):
        tf.crest_factor([])
    with pytest.raises(tf.Error):
        tf.load_model(tmp_path / "missing.json")
