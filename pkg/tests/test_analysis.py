import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopysim.analysis import (
    AnalysisError,
    SteadyStateCriterion,
    SteadyStateDetector,
    amplitude,
    count_lobes,
    detect_steady_state,
    dominant_wavenumber,
    rates_from_states,
    summarize_shape,
    turning_distance,
    turning_function,
)
from loopysim.geometry import TWO_PI

from .oracles import harmonic_argmax, turning_distance_loop

N = 36


def _sine(k, n=N, amp=1.0):
    return amp * np.sin(2 * np.pi * k * np.arange(n) / n)


# -- steady state ------------------------------------------------------------


def test_steady_state_immediate():
    crit = SteadyStateCriterion(deriv_tol=1e-6, hold_steps=10, max_steps=100)
    assert detect_steady_state(np.zeros(50), crit) == 0


def test_steady_state_exponential_decay():
    dt = 0.01
    t = np.arange(20_000) * dt
    crit = SteadyStateCriterion(deriv_tol=1e-3, hold_steps=100, max_steps=20_000)
    k = detect_steady_state(np.exp(-t), crit)
    # exp(-t) < 1e-3 first holds just after t = ln(1000)
    assert k == math.floor(math.log(1000) / dt) + 1


def test_steady_state_never_settles():
    crit = SteadyStateCriterion(deriv_tol=1e-6, hold_steps=10, max_steps=1000)
    rates = np.ones(1000)
    rates[::11] = 0.0
    assert detect_steady_state(rates, crit) is None


def test_steady_state_respects_max_steps():
    crit = SteadyStateCriterion(deriv_tol=0.5, hold_steps=5, max_steps=100)
    rates = np.concatenate((np.ones(100), np.zeros(100)))
    assert detect_steady_state(rates, crit) is None


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=20, max_size=200), st.floats(1e-3, 0.5), st.integers(1, 10))
def test_steady_state_monotone_in_tolerance(rates, tol, hold):
    tight = detect_steady_state(rates, SteadyStateCriterion(tol, hold, 10_000))
    loose = detect_steady_state(rates, SteadyStateCriterion(2 * tol, hold, 10_000))
    if tight is not None:
        assert loose is not None and loose <= tight


def test_streaming_detector_matches_batch():
    rng = np.random.default_rng(1)
    rates = np.abs(rng.normal(size=3000)) * np.exp(-np.arange(3000) / 300)
    crit = SteadyStateCriterion(1e-2, 50, 10_000)
    det = SteadyStateDetector(crit)
    for chunk in np.array_split(rates, 37):
        det.feed(chunk)
    assert det.found == detect_steady_state(rates, crit)


def test_rates_from_states():
    states = [np.array([0.0, 1.0]), np.array([0.1, 1.0]), np.array([0.1, 0.7])]
    np.testing.assert_allclose(rates_from_states(states, 0.1), [1.0, 3.0])
    with pytest.raises(AnalysisError):
        rates_from_states(states[:1], 0.1)


def test_criterion_validation():
    with pytest.raises(AnalysisError):
        SteadyStateCriterion(deriv_tol=0.0)
    with pytest.raises(AnalysisError):
        SteadyStateCriterion(hold_steps=0)


# -- lobes and amplitude --------------------------------------------------------


@pytest.mark.parametrize("k", range(1, 10))
def test_lobes_pure_sine(k):
    q = _sine(k)
    assert count_lobes(q) == k == harmonic_argmax(q.tolist())


@pytest.mark.parametrize("k", range(1, 10))
def test_lobes_noisy_sine(k):
    rng = np.random.default_rng(100 + k)
    q = _sine(k) + rng.normal(0.0, 0.01, N)
    assert count_lobes(q) == harmonic_argmax(q.tolist()) == k


def test_lobes_flat_and_tiny():
    assert count_lobes(np.full(N, 0.3)) == 0
    rng = np.random.default_rng(0)
    assert count_lobes(0.1 + 1e-4 * rng.normal(size=N)) == 0


def test_lobes_peak_on_the_wrap():
    q = np.roll(_sine(3), 5)
    for shift in range(N):
        assert count_lobes(np.roll(q, shift)) == 3


def test_lobes_rejects_bad_shape():
    with pytest.raises(AnalysisError):
        count_lobes([1.0, 2.0])


def test_dominant_wavenumber_agrees_with_dft_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        q = rng.normal(size=N)
        assert dominant_wavenumber(q) == harmonic_argmax(q.tolist())


def test_amplitude():
    # 36 / 9 cells per period puts samples exactly on the crests
    assert amplitude(_sine(9, amp=0.25)) == pytest.approx(0.25, rel=1e-12)
    q = _sine(5) + 0.3
    assert amplitude(np.roll(q, 7)) == amplitude(-q) == amplitude(q)
    assert amplitude(np.full(5, 2.0)) == 0.0


# -- turning distance ----------------------------------------------------------


def _closed_random(rng, n, sigma=0.3):
    theta = rng.normal(0.0, sigma, n)
    return theta - theta.mean() + TWO_PI / n


def test_turning_function_is_cumulative():
    np.testing.assert_allclose(turning_function([0.1, 0.2, 0.3]), [0.1, 0.3, 0.6])


def test_turning_distance_identity_and_relabel():
    rng = np.random.default_rng(7)
    a = _closed_random(rng, 12)
    assert turning_distance(a, a) <= 1e-12
    for c in range(12):
        assert turning_distance(a, np.roll(a, c)) <= 1e-12


def test_turning_distance_matches_loop_oracle():
    rng = np.random.default_rng(8)
    for _ in range(200):
        a, b = _closed_random(rng, 10), _closed_random(rng, 10)
        assert abs(turning_distance(a, b) - turning_distance_loop(a, b)) <= 1e-12


def test_turning_distance_symmetric_and_triangle():
    rng = np.random.default_rng(9)
    for _ in range(500):
        a, b, c = (_closed_random(rng, 12) for _ in range(3))
        assert abs(turning_distance(a, b) - turning_distance(b, a)) <= 1e-12
        assert turning_distance(a, c) <= turning_distance(a, b) + turning_distance(b, c) + 1e-9


def test_turning_distance_rejects_mismatch():
    with pytest.raises(AnalysisError):
        turning_distance(np.ones(5), np.ones(6))


# -- shape summary --------------------------------------------------------------


def test_summarize_circle():
    theta = np.full(N, TWO_PI / N)
    s = summarize_shape(np.zeros(N), theta)
    assert s.valid and s.lobe_count == 0 and s.amplitude == 0.0
    np.testing.assert_allclose(s.projected, theta, atol=1e-12)


def test_summarize_lobed_shape_valid():
    q = _sine(3, amp=0.15)
    s = summarize_shape(q, TWO_PI / N + q)
    assert s.valid and s.lobe_count == 3
    assert abs(s.projected.sum() - TWO_PI) <= 1e-9


def test_summarize_crossing_is_invalid():
    q = _sine(2, amp=1.2)
    s = summarize_shape(q, TWO_PI / N + q)
    assert not s.valid
    assert s.self_intersects or s.projection_error
    d = s.to_dict()
    assert d["valid"] is False and len(d["angles"]) == N
