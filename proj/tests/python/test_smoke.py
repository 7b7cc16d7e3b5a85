import json

import pytest

import hspsim


def test_poisson_stream_basics():
    stream = hspsim.generate_poisson_stream(1e5, 0.1, hspsim.Origin.Background, seed=7)
    n = len(stream)
    assert abs(n - 10_000) < 500  # 5 sigma
    times = [e.time_ps for e in stream.events]
    assert times == sorted(times)


def test_thin_and_jitter_chain():
    stream = hspsim.generate_poisson_stream(1e5, 0.1, seed=8)
    thinned = hspsim.thin_stream(stream, 0.5, seed=9)
    assert 0 < len(thinned) < len(stream)
    jittered = hspsim.apply_jitter(thinned, 500, seed=10)
    assert len(jittered) == len(thinned)


def test_run_experiment_returns_records():
    config = hspsim.ExperimentConfig()
    config.max_accepted_triggers = 2000
    config.seed = 123
    records, n_triggers = hspsim.run_experiment(config)
    assert n_triggers == 2000
    assert len(records) == 2000
    gate_ps = 100_000
    for rec in records[:200]:
        for det in rec.detections:
            for d in det:
                assert 0 <= d.time_in_gate_ps <= gate_ps


def test_determinism():
    config = hspsim.ExperimentConfig()
    config.max_accepted_triggers = 1000
    config.seed = 42
    a = hspsim.analyze_run(config)
    b = hspsim.analyze_run(config)
    assert a["onf"] == b["onf"]
    assert a["gamma"] == b["gamma"]


def test_config_json_round_trip():
    config = hspsim.ExperimentConfig()
    config.delta_t_switch_ns = 15.0
    text = config.to_json()
    parsed = json.loads(text)
    assert parsed["switch"]["delta_t_switch_ns"] == 15.0
    back = hspsim.ExperimentConfig.from_json(text)
    assert back.delta_t_switch_ns == 15.0


def test_predict_matches_monte_carlo_roughly():
    config = hspsim.ExperimentConfig()
    config.max_accepted_triggers = 150_000
    config.seed = 99
    prediction = hspsim.predict(config)
    measured = hspsim.analyze_run(config)
    assert measured["onf"] == pytest.approx(prediction["onf"], abs=0.01)
    assert measured["gamma"] == pytest.approx(0.14, rel=0.1)


def test_calibration_is_monotone():
    config = hspsim.ExperimentConfig()
    low = hspsim.calibrate_background(0.05, config)
    high = hspsim.calibrate_background(0.115, config)
    assert 0 < low < high


def test_sweep_point_estimators():
    config = hspsim.ExperimentConfig()
    config.seed = 7
    point = hspsim.analyze_sweep_point(config, 30.0, triggers=100_000,
                                       triggers_blocked=20_000, triggers_peak_out=50_000)
    assert 0.0 < point.onf < 0.2
    assert 0.10 < point.gamma < 0.18
    assert point.n_triggers == 100_000
