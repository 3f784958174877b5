import math

import numpy as np
import pytest

from dybm import experiment as ex
from dybm.errors import BoundaryError, ConfigError, DimensionError, DivergenceError


# --- noisy sine ----------------------------------------------------------------

def test_clean_sine_values():
    spec = ex.NoisySine(100.0, 1.0, 1.0)
    assert spec.clean(25) == pytest.approx(1.0, abs=1e-15)
    assert abs(spec.clean(50)) < 1e-12
    assert spec.clean(75) == pytest.approx(-1.0, abs=1e-15)


def test_noise_mean_and_variance():
    spec = ex.NoisySine(100.0, 1.0, 1.0)
    rng = np.random.default_rng(20)
    draws = spec.clean(10) + rng.standard_normal(1_000_000)
    assert abs(draws.mean() - math.sin(2 * math.pi * 10 / 100)) < 0.005
    assert abs(draws.var() - 1.0) < 0.01
    assert abs(ex.generate_noisy_sine(spec, 25, np.random.default_rng(0)) - 1.0) < 6


def test_time_starts_at_one():
    with pytest.raises(ValueError):
        ex.generate_noisy_sine(ex.NoisySine(), 0, np.random.default_rng(0))


# --- rolling MSE -----------------------------------------------------------------

def test_rolling_mse_constant():
    assert ex.rolling_mse(np.full(200, 2.0), 100) == 2.0


def test_rolling_mse_window_position():
    errs = np.zeros(200)
    errs[100:] = 1.0
    assert ex.rolling_mse(errs, 100) == 0.5
    assert ex.rolling_mse(errs, 50) == 0.0
    assert ex.rolling_mse(errs, 150) == 1.0


@pytest.mark.parametrize("t", [0, 49, 151, 199])
def test_rolling_mse_boundary(t):
    with pytest.raises(BoundaryError):
        ex.rolling_mse(np.ones(200), t)


def test_rolling_curve_matches_pointwise():
    rng = np.random.default_rng(21)
    errs = rng.random(300)
    curve = ex.rolling_mse_curve(errs, 100)
    assert np.all(np.isnan(curve[:50])) and np.all(np.isnan(curve[251:]))
    for t in range(50, 251):
        assert curve[t] == pytest.approx(ex.rolling_mse(errs, t), abs=1e-12)


def test_average_curves():
    assert ex.average_curves([np.ones(4), np.full(4, 3.0)]).tolist() == [2.0] * 4
    c = np.random.default_rng(22).random(10)
    np.testing.assert_allclose(ex.average_curves([c, 2 - c]), np.ones(10), atol=1e-15)
    with pytest.raises(DimensionError):
        ex.average_curves([np.ones(3), np.ones(4)])


def test_converged_mse_uses_final_tenth():
    curve = np.concatenate([np.full(900, 5.0), np.full(100, 1.0)])
    assert ex.converged_mse(curve) == 1.0
    with pytest.raises(BoundaryError):
        ex.converged_mse(np.full(10, np.nan))


def test_improvement():
    assert ex.improvement(0.8, 1.0) == pytest.approx(0.2)
    assert ex.improvement(1.0, 1.0) == 0.0


# --- configuration ---------------------------------------------------------------

@pytest.mark.parametrize("bad", [
    dict(d=0), dict(d=2, mu=1.0), dict(d=2, model="lstm"), dict(d=2, rule="adam"),
    dict(d=2, runs=0), dict(d=2, steps=100), dict(d=2, mse_window=7), dict(d=2, eta0=-1),
    dict(d=2, noise_std=-1),
])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ex.ExperimentConfig(**bad)


def test_var_forces_zero_decay():
    assert ex.ExperimentConfig(d=4, model="var", mu=0.9).decay == 0.0
    assert ex.ExperimentConfig(d=4, mu=0.9).decay == 0.9


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("DYBM_THREADS", "3")
    assert ex.thread_count() == 3
    for bad in ("0", "x", "-2"):
        monkeypatch.setenv("DYBM_THREADS", bad)
        with pytest.raises(ConfigError):
            ex.thread_count()


# --- online loop -----------------------------------------------------------------

def small(**kw):
    base = dict(d=3, mu=0.5, steps=400, runs=30, seed=7)
    base.update(kw)
    return ex.ExperimentConfig(**base)


def test_records_have_expected_shape():
    records = ex.run_online(small())
    assert [r.run for r in records] == list(range(30))
    assert all(r.steps == 400 for r in records)


def test_frozen_learning_predicts_zero():
    config = small(eta0=0.0, rule="sgd")
    records = ex.run_online(config)
    for r in records:
        assert np.all(r.predictions == 0.0)
        assert np.array_equal(r.sq_errors, r.targets ** 2)


def test_run_data_matches_seed_stream():
    config = small()
    records = ex.run_online(config)
    rng = np.random.default_rng(np.random.SeedSequence(7).spawn(30)[4])
    assert np.array_equal(records[4].targets, config.signal.series(400, rng))


def test_run_independent_of_run_count():
    # a run's stream depends on its child seed only; spawn keys are positional
    a = ex.run_online(small(runs=5))
    b = ex.run_online(small(runs=30))
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.targets, rb.targets)
        assert np.array_equal(ra.predictions, rb.predictions)


@pytest.mark.parametrize("threads", [1, 2, 8])
def test_thread_count_does_not_change_results(threads):
    ref = ex.run_online(small(), threads=1)
    got = ex.run_online(small(), threads=threads)
    for r, g in zip(ref, got):
        assert np.array_equal(r.predictions, g.predictions)


def test_batched_runs_equal_single_run_loops():
    config = small(runs=3)
    records = ex.run_online(config)
    for r in records:
        data = ex.make_data(config, r.run)[:, None, None]
        preds, _ = ex._train_batch(config, data)
        assert np.array_equal(preds[:, 0, 0], r.predictions)


def test_user_data_multi_unit():
    data = np.random.default_rng(23).normal(size=(300, 2))
    records = ex.run_online(small(runs=2, steps=300), data=data)
    assert records[0].predictions.shape == (300, 2)
    assert records[0].sq_errors.shape == (300,)
    assert np.array_equal(records[0].predictions, records[1].predictions)


def test_divergence_reports_run_and_step():
    data = np.full(300, 1e200)
    with pytest.raises(DivergenceError) as info:
        ex.run_online(small(runs=1, steps=300, rule="sgd", eta0=10.0), data=data)
    assert info.value.run == 0 and info.value.step >= 1


def test_summary_fields():
    config = small(steps=1000)
    s = ex.summarize(config, ex.run_online(config))
    assert s.runs == 30 and s.steps == 1000 and s.mu == 0.5
    assert s.std_error > 0 and s.seconds_per_1000_steps > 0
    assert s.curve.shape == (1000,)


def test_short_runs_have_no_converged_window():
    # the final tenth of 400 steps lies entirely beyond the last valid window centre
    config = small()
    s = ex.summarize(config, ex.run_online(config))
    assert math.isnan(s.converged_mse) and math.isnan(s.std_error)


def test_time_per_run_positive():
    assert ex.time_per_run(small(runs=4), repeats=2) > 0


def test_planted_lag_evaluation():
    config = small(d=64, runs=4, steps=1000, noise_std=0.0)
    model = ex.planted_lag_model(64, 50, -1.0, batch_shape=(4,))
    records = ex.evaluate_frozen(model, config)
    assert np.max(records[0].sq_errors[50:]) < 1e-24


@pytest.mark.parametrize("weight, expected", [(-1.0, 2.0), (1.0, 4.0)])
def test_planted_lag_on_noisy_sine(weight, expected):
    # residual is eps[t] - w eps[t-50] plus (1 + w) sin(...): variance 2, plus 2 when w = +1
    config = small(d=64, runs=20, steps=3000)
    model = ex.planted_lag_model(64, 50, weight, batch_shape=(20,))
    mse = ex.summarize(config, ex.evaluate_frozen(model, config)).converged_mse
    assert mse == pytest.approx(expected, rel=0.05)
