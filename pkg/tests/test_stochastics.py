"""Tests for the Monte Carlo layer."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qconvsim import stochastics as sx


def test_model_validation():
    with pytest.raises(ValueError):
        sx.PairSource(-1e-3)
    with pytest.raises(ValueError):
        sx.FiberChannel(length_km=-1)
    with pytest.raises(ValueError):
        sx.Detector(efficiency=1.5)
    with pytest.raises(ValueError):
        sx.Detector(window_ps=0)


def test_pair_rate_and_channel_loss():
    assert sx.PairSource(6e-4, 100e6).pair_rate_hz == pytest.approx(60e3)
    assert sx.FiberChannel(6.2, 0.2, 1.0).loss_db == pytest.approx(2.24)


def test_draw_pairs_zero_and_negative():
    rng = np.random.default_rng(0)
    assert np.all(sx.draw_pairs(0.0, rng, 1000) == 0)
    with pytest.raises(ValueError):
        sx.draw_pairs(-0.1, rng)


def test_draw_pairs_mean_small_mu():
    n, mu = 10**7, 6e-4
    k = sx.draw_pairs(mu, np.random.default_rng(1), n)
    assert abs(k.mean() - mu) < 3 * math.sqrt(mu / n)


def test_draw_pairs_variance_equals_mean():
    k = sx.draw_pairs(2.0, np.random.default_rng(2), 10**6)
    assert k.var() == pytest.approx(k.mean(), rel=0.02)


def test_zero_truncated_pairs():
    k = sx.draw_pairs_given_any(0.5, np.random.default_rng(3), 10**6)
    assert k.min() >= 1
    # E[k | k >= 1] = mu / (1 - e^-mu)
    assert k.mean() == pytest.approx(0.5 / -math.expm1(-0.5), rel=5e-3)


def test_survival_values():
    assert sx.survival(0.0) == 1.0
    assert sx.survival(10.0) == pytest.approx(0.1)
    assert sx.survival(15.5) == pytest.approx(0.02818, abs=5e-6)
    with pytest.raises(ValueError):
        sx.survival(-1.0)


@given(st.floats(0, 60), st.floats(0, 60))
def test_survival_composes(a, b):
    assert sx.survival(a + b) == pytest.approx(sx.survival(a) * sx.survival(b), rel=1e-12, abs=1e-300)


def test_misroute_values():
    assert sx.misroute_prob(0.0, 50.0) == 0.0
    assert sx.misroute_prob(10.0, 0.0) == 0.5
    # independent oracle: math.erfc
    assert sx.misroute_prob(10.0, 50.0) == pytest.approx(0.5 * math.erfc(5 / math.sqrt(2)), rel=1e-12)
    assert sx.misroute_prob(10.0, 50.0) == pytest.approx(2.87e-7, rel=2e-3)


@given(st.floats(0.1, 100), st.floats(0, 200), st.floats(0, 50))
def test_misroute_monotone(sigma, offset, step):
    assert sx.misroute_prob(sigma, offset + step) <= sx.misroute_prob(sigma, offset)
    assert sx.misroute_prob(sigma + step, offset) >= sx.misroute_prob(sigma, offset)


def test_detect_edge_cases():
    rng = np.random.default_rng(4)
    clicked, _ = sx.detect(1.0, sx.Detector(1.0), rng, size=1000)
    assert clicked.all()
    clicked, tags = sx.detect(1.0, sx.Detector(0.0), rng, size=1000)
    assert not clicked.any() and np.isnan(tags).all()
    with pytest.raises(ValueError):
        sx.detect(1.5, sx.Detector(), rng)


def test_detect_click_rate_binomial():
    n = 10**6
    clicked, _ = sx.detect(0.5, sx.Detector(0.7), np.random.default_rng(5), size=n)
    assert abs(clicked.mean() - 0.35) < 3 * math.sqrt(0.35 * 0.65 / n)


def test_detect_with_darks_and_jitter():
    d = sx.Detector(0.2, dark_rate_hz=1e6, jitter_fwhm_ps=150.0, window_ps=200.0)
    n = 10**6
    clicked, tags = sx.detect(0.5, d, np.random.default_rng(6), true_time_ps=0.0, size=n)
    p = 1 - (1 - 0.1) * (1 - d.dark_prob)
    assert abs(clicked.mean() - p) < 4 * math.sqrt(p * (1 - p) / n)
    assert d.dark_prob == pytest.approx(-math.expm1(-1e6 * 400e-12))
    assert np.nanstd(tags) > d.sigma_ps * 0.9


def test_bernoulli_indices_statistics():
    rng = np.random.default_rng(7)
    idx = sx.bernoulli_indices(1e-3, 10**7, rng)
    assert np.all(np.diff(idx) > 0) and idx.max() < 10**7
    assert abs(idx.size - 1e4) < 4 * math.sqrt(1e4)
    assert sx.bernoulli_indices(0.0, 10, rng).size == 0
    assert np.array_equal(sx.bernoulli_indices(1.0, 5, rng), np.arange(5))


def test_substreams_reproducible_and_distinct():
    a = sx.substream(1, 2, 3).random(4)
    assert np.array_equal(a, sx.substream(1, 2, 3).random(4))
    assert not np.array_equal(a, sx.substream(1, 2, 4).random(4))


def test_parallel_map_preserves_order(monkeypatch):
    monkeypatch.setenv("QCONVSIM_THREADS", "4")
    assert sx.thread_count() == 4
    assert sx.parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]


def test_resolve_keeps_one_click_per_pulse():
    rng = np.random.default_rng(8)
    s = sx.ClickStream.resolve([3, 1, 3, 3], [0, 1, 2, 3], [0.0, 1.0, 2.0, 3.0], rng)
    assert s.pulse.tolist() == [1, 3]
    assert s.detector[0] == 1
    assert s.singles().sum() == 2


def test_coincide_identical_streams():
    # every other pulse, so the offset pairing finds nothing
    s = sx.ClickStream(np.arange(0, 20, 2), np.zeros(10, np.int8), np.zeros(10))
    t = sx.coincide(s, s, 200.0, 20)
    assert t.coincidences.sum() == 10 == t.singles_a.sum()
    assert t.accidentals.sum() == 0
    assert t.car == float("inf")


def test_coincide_window_and_tally_add():
    a = sx.ClickStream(np.array([0, 1]), np.array([0, 1], np.int8), np.array([0.0, 0.0]))
    b = sx.ClickStream(np.array([0, 1]), np.array([0, 1], np.int8), np.array([150.0, 250.0]))
    t = sx.coincide(a, b, 200.0, 2)
    assert t.coincidences[0, 0] == 1 and t.coincidences.sum() == 1
    # Alice pulse 0 against Bob pulse 1 is 250 ps apart, outside the window
    assert t.accidentals.sum() == 0
    total = t + sx.Tally.empty()
    assert total.pulses == 2 and np.array_equal(total.coincidences, t.coincidences)


def test_dark_only_coincidences_match_accidentals():
    rng = np.random.default_rng(9)
    n, p = 10**7, 2e-3
    streams = []
    for _ in range(2):
        idx = sx.bernoulli_indices(p, n, rng)
        streams.append(sx.ClickStream(idx, np.zeros(idx.size, np.int8), rng.uniform(-200, 200, idx.size)))
    t = sx.coincide(*streams, 200.0, n)
    c, acc = t.coincidences.sum(), t.accidentals.sum()
    # expected n p^2 * P(|U1 - U2| <= 200) = n p^2 * 3/4
    assert abs(c - 0.75 * n * p * p) < 4 * math.sqrt(0.75 * n * p * p)
    assert abs(c - acc) < 4 * math.sqrt(c + acc)
