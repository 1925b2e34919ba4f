import math
import os

import pytest

import tailq


def test_kde_single_sample_mode():
    m = tailq.fit_kde([10.0], bandwidth=2.0)
    assert m.grid_points == 512
    assert abs(m(10.0) - 1.0 / (2.0 * math.sqrt(2.0 * math.pi))) < 1e-4
    assert m(-1.0) == 0.0


def test_bandwidth_fallback_and_errors():
    assert tailq.silverman_bandwidth([5.0] * 10) == pytest.approx(5e-3)
    with pytest.raises(tailq.DataError):
        tailq.silverman_bandwidth([1.0])
    with pytest.raises(tailq.DataError):
        tailq.fit_kde([])


def test_divergence():
    a = tailq.fit_kde([1, 2, 3, 4, 5])
    b = tailq.fit_kde([100, 101, 102])
    assert tailq.jsd(a, b) == tailq.jsd(b, a)
    assert abs(tailq.jsd(a, b) - 1.0) < 1e-3
    assert tailq.jsd(a, a) <= 1e-9
    assert abs(tailq.jsd_grid([0.5, 0.5], [1.0, 0.0], 0.0, 1.0) - 0.31128) < 1e-4


def test_tail_quality_hand_example():
    s = tailq.TimingStore.from_rows(["a", "b"], [[1, 100], [1, 100]], correct=[True, True])
    r = tailq.tail_quality(s, "10ms")
    assert r.per_round_quality == [100.0, 0.0]
    assert r.worst_case == 0.0
    inf = tailq.tail_quality(s, "inf")
    assert inf.worst_case == inf.origin_quality == 100.0
    assert tailq.resolve_threshold("@50", s) == 1.0
    with pytest.raises(tailq.ConfigError):
        tailq.tail_quality(s, "@150")


def test_custom_metric_sees_validity():
    s = tailq.TimingStore.from_rows(["a", "b"], [[1, 9], [9, 9]])
    share = lambda inst, valid: 100.0 * sum(valid) / len(inst)
    r = tailq.tail_quality(s, "5", share)
    assert r.per_round_quality == [50.0, 0.0]


def test_sweep_is_monotone():
    s = tailq.TimingStore.from_rows(["a", "b", "c"], [[1, 2, 3], [2, 3, 4], [5, 1, 2]], correct=[True, False, True])
    sweep = tailq.quality_threshold_sweep(s, [0.5, 1, 2, 3, 4, 5])
    worst = [p[1] for p in sweep]
    assert worst == sorted(worst)
    assert sweep[-1][1] == sweep[-1][3]


def test_estimate_replay_constant(tmp_path):
    rows = [[3.0] * 100, [4.0] * 100]
    s = tailq.TimingStore.from_rows(["x", "y"], rows)
    path = str(tmp_path / "t.jsonl")
    s.save(path)
    back = tailq.TimingStore.load(path)
    assert back.rounds == 100
    result, store = tailq.estimate_replay(back)
    assert result.converged_all
    assert result.total_rounds == 55
    assert store.rounds == 55


def test_estimate_synthetic_and_generalization():
    cfg = tailq.EstimatorConfig()
    result, store = tailq.estimate_synthetic("lognormal", seed=3, units=4, config=cfg, log_mean=2.0)
    assert result.converged_all
    mean_train, mean_test, per_unit = tailq.generalization(result, store)
    assert len(per_unit) == 4
    assert mean_test < cfg.tolerance


def test_arithmetic():
    assert abs(tailq.delta(43.93, 44.29) + 0.36) < 1e-9
    assert tailq.budget_ratio(13720) == 13720 / 262742
    assert tailq.DEFAULT_BASELINE_COUNT == 262742
    assert tailq.ols_fit([1, 2, 3], [2, 4, 6]) == (2.0, 0.0, 1.0)


@pytest.mark.skipif("TAILQ_FAKE_MODEL" not in os.environ, reason="needs the test child")
def test_subprocess_driver():
    lat = tailq.time_subprocess([os.environ["TAILQ_FAKE_MODEL"]], ["a", "b"], rounds=2)
    assert len(lat) == 2 and all(v > 0 for row in lat for v in row)
    with pytest.raises(tailq.DataError):
        tailq.time_subprocess([os.environ["TAILQ_FAKE_MODEL"], "--mode", "garbage"], ["a"])
