import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cbfnav.audio import (
    FLOOR_CLAMP,
    DetectorConfig,
    DetectorState,
    RiskTimeline,
    apply_decision,
    detect_stream,
    detector_update,
    frame_rms,
    inflate,
    periodicity_peak,
    snr_db,
)
from cbfnav.barrier import Ellipse, Obstacle
from cbfnav.fixtures import gated_noise, silence

CFG = DetectorConfig()
FRAME = CFG.frame_ms * 1e-3


def brute_autocorr(e, lag):
    # direct transcription of the normalized, mean-removed autocorrelation
    e = list(map(float, e))
    m = sum(e) / len(e)
    num = sum((e[t] - m) * (e[t + lag] - m) for t in range(len(e) - lag))
    den = sum((x - m) ** 2 for x in e)
    return num / den


def test_frame_rms_examples():
    assert frame_rms(np.zeros(160)) == 0.0
    assert frame_rms(np.full(50, -0.3)) == pytest.approx(0.3)
    assert frame_rms(np.tile([1.0, -1.0], 80)) == 1.0
    with pytest.raises(ValueError):
        frame_rms([])


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=200))
def test_frame_rms_nonnegative_zero_iff_silent(xs):
    e = frame_rms(xs)
    assert e >= 0
    assert (e == 0) == all(x == 0 for x in xs) or e < 1e-150


def test_snr_examples():
    floor = [0.01] * 5
    assert snr_db(0.01, floor) == pytest.approx(0.0)
    assert snr_db(0.1, floor) == pytest.approx(10.0)
    assert snr_db(0.001, floor) == pytest.approx(-10.0)
    # median, not mean
    assert snr_db(0.02, [0.02, 0.02, 5.0]) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        snr_db(1.0, [])


def test_snr_on_digital_silence_is_finite():
    assert snr_db(0.0, [0.0, 0.0]) == 0.0
    assert snr_db(1.0, [0.0]) == pytest.approx(10 * math.log10(1 / FLOOR_CLAMP))


def test_periodicity_constant_is_zero():
    assert periodicity_peak(np.full(40, 0.2), (6, 20)) == 0.0
    with pytest.raises(ValueError):
        periodicity_peak(np.ones(30), (6, 20))


def test_periodicity_periodic_envelope():
    # full-window normalization scores an exact period P as 1 - P/K, so a
    # long window is needed to clear 0.99
    K, P = 1200, 8
    env = 1.0 + 0.5 * np.sin(2 * np.pi * np.arange(K) / P)
    assert periodicity_peak(env, (6, 20)) >= 0.99
    assert periodicity_peak(env, (6, 20)) == pytest.approx(brute_autocorr(env, P))


def test_periodicity_white_noise():
    K = 200
    below = sum(
        periodicity_peak(np.abs(np.random.default_rng(s).standard_normal(K)), (6, 20)) < 0.2 for s in range(100)
    )
    assert below >= 95


@given(
    st.lists(st.floats(0, 10), min_size=40, max_size=80),
    st.integers(1, 10),
)
def test_periodicity_matches_brute_force_and_is_bounded(env, lo):
    hi = min(lo + 5, len(env) // 2)
    env = np.array(env)
    peak = periodicity_peak(env, (lo, hi))
    assert -1.0 - 1e-12 <= peak <= 1.0 + 1e-12
    d = env - env.mean()
    if d @ d > 1e-12:
        assert peak == pytest.approx(max(brute_autocorr(env, k) for k in range(lo, hi + 1)), abs=1e-9)


def test_flatness_guard():
    env = np.full(40, 0.5)
    env[::7] += 1e-7
    assert periodicity_peak(env, (6, 20), flat_tol=1e-3) == 0.0
    assert periodicity_peak(env, (6, 20), flat_tol=0.0) > 0.5


def _state(on=False):
    s = DetectorState.initial(CFG)
    s.on = on
    return s


def test_switches_on_after_sustained_cues():
    s = _state()
    s = apply_decision(s, 3.0, 0.3, 0.0, 0.1, CFG)
    assert not s.on  # 100 ms < 180 ms
    s = apply_decision(s, 3.0, 0.3, 0.1, 0.2, CFG)
    assert s.on


def test_low_snr_keeps_off():
    s = _state()
    for k in range(20):
        s = apply_decision(s, 1.5, 0.9, 0.1 * k, 0.1 * (k + 1), CFG)
    assert not s.on


def test_ambiguous_region_keeps_on():
    s = _state(on=True)
    for k in range(20):
        s = apply_decision(s, 0.0, 0.2, 0.1 * k, 0.1 * (k + 1), CFG)
    assert s.on


def test_off_needs_full_delay():
    s = _state(on=True)
    for k in range(3):
        s = apply_decision(s, -3.0, 0.05, 0.1 * k, 0.1 * (k + 1), CFG)
    assert s.on
    s = apply_decision(s, -3.0, 0.05, 0.3, 0.4, CFG)
    assert not s.on


def test_interrupted_condition_restarts_delay():
    s = _state()
    s = apply_decision(s, 3.0, 0.3, 0.0, 0.1, CFG)
    s = apply_decision(s, 0.0, 0.3, 0.1, 0.2, CFG)
    s = apply_decision(s, 3.0, 0.3, 0.2, 0.3, CFG)
    assert not s.on


cues = st.lists(st.tuples(st.floats(-10, 10), st.floats(-1, 1)), min_size=1, max_size=60)


@given(cues)
def test_hysteresis_properties(seq):
    s = _state()
    on_run = off_run = 0
    transitions = 0
    episodes = 0
    prev_on_cond = prev_off_cond = False
    for k, (snr, f) in enumerate(seq):
        was = s.on
        on_cond = snr >= CFG.mu_on and f >= CFG.gamma_on
        off_cond = snr < CFG.mu_off and f < CFG.gamma_off
        episodes += (on_cond and not prev_on_cond) + (off_cond and not prev_off_cond)
        prev_on_cond, prev_off_cond = on_cond, off_cond
        on_run = on_run + 1 if on_cond else 0
        off_run = off_run + 1 if off_cond else 0
        s = apply_decision(s, snr, f, 0.1 * k, 0.1 * (k + 1), CFG)
        if s.on != was:
            transitions += 1
            held = 0.1 * (on_run if s.on else off_run)
            delay = (CFG.on_delay_ms if s.on else CFG.off_delay_ms) * 1e-3
            assert held >= delay - 1e-9
            # a switch consumes the run; the next switch needs a fresh one
            on_run = off_run = 0
    assert transitions <= episodes


def test_time_must_increase():
    s = _state()
    frame = np.zeros(1600)
    s, _ = detector_update(s, frame, 0.1, CFG, 16000)
    with pytest.raises(ValueError):
        detector_update(s, frame, 0.1, CFG, 16000)


def test_silence_gives_all_off_timeline():
    tl = detect_stream(silence(5.0), 16000, CFG)
    assert tl.transitions == 0 and tl.at(4.9) == 0


def test_fixture_burst_timing():
    fx = gated_noise(8.0, ((2.0, 4.0),), seed=1)
    tl = detect_stream(fx.samples, fx.sample_rate, CFG)
    assert tl.transitions == 2
    (on, off), = tl.intervals_on()
    assert 2.0 <= on <= 2.0 + CFG.on_delay_ms * 1e-3 + 2 * FRAME + 1e-9
    assert 4.0 <= off <= 4.0 + CFG.off_delay_ms * 1e-3 + 2 * FRAME + 1e-9


def test_detection_is_deterministic():
    fx = gated_noise(6.0, ((1.0, 3.0),), seed=4)
    assert detect_stream(fx.samples, 16000, CFG) == detect_stream(fx.samples.copy(), 16000, CFG)


def test_stream_rejects_bad_input():
    with pytest.raises(ValueError):
        detect_stream(np.zeros(100), 0, CFG)
    with pytest.raises(ValueError):
        detect_stream(np.zeros((100, 2)), 16000, CFG)


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(mu_on=-2.0)
    with pytest.raises(ValueError):
        DetectorConfig(gamma_off=0.5)
    with pytest.raises(ValueError):
        DetectorConfig(on_delay_ms=-1)
    with pytest.raises(ValueError):
        DetectorConfig(floor_window=1)
    with pytest.raises(ValueError):
        DetectorConfig(envelope_window=30)


def test_inflate_examples():
    disc = Obstacle(0, 0, 0.5, 0.3)
    assert inflate(disc, 1)[0] == pytest.approx(0.8)
    assert inflate(disc, 0)[0] == 0.5
    ell = Obstacle(0, 0, 0.5, 0.3, Ellipse(1.8))
    r_eff, (a, b) = inflate(ell, 1)
    assert (b, a) == pytest.approx((0.8, 1.44))


@given(st.floats(0.01, 5), st.floats(0, 2), st.floats(0, 2))
def test_inflation_monotone(r, d1, d2):
    lo, hi = sorted((d1, d2))
    assert inflate(Obstacle(0, 0, r, lo), 1)[0] <= inflate(Obstacle(0, 0, r, hi), 1)[0]
    assert inflate(Obstacle(0, 0, r, lo), 0)[0] <= inflate(Obstacle(0, 0, r, lo), 1)[0]


def test_timeline_lookup_and_csv(tmp_path):
    tl = RiskTimeline((0.0, 1.5, 3.0), (0, 1, 0))
    assert [tl.at(t) for t in (0.0, 1.49, 1.5, 2.9, 3.0, 10.0)] == [0, 0, 1, 1, 0, 0]
    assert tl.intervals_on() == [(1.5, 3.0)]
    path = tmp_path / "risk.csv"
    tl.to_csv(path)
    assert path.read_text().splitlines()[0] == "t_s,z"
    assert RiskTimeline.from_csv(path) == tl
    with pytest.raises(ValueError):
        RiskTimeline((0.0, 0.0), (0, 1))
