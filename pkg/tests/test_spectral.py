import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fermieq import derive, spectral
from fermieq.spectral import (
    SpectralProfile, arcsin_gap, cross_integral, log_delta_sum, jm_1d, jm_exact, jm_pairwise,
    lemma5_bound, lemma6_bound, lemma7_rhs, levels, omega_count, omega_scaled_count,
    y_derivative, y_function,
)


def test_levels_d1_example():
    cfg = derive(1, 9, 3, 1 / 3, 0.5)
    v = levels(1, cfg).values
    assert len(v) == 9
    assert np.min(np.abs(v)) == pytest.approx(0.0, abs=1e-14)
    assert np.max(np.abs(v)) <= 4 * math.sin(math.pi / 9) + 1e-15
    with pytest.raises(ValueError):
        levels(0, cfg)


def test_levels_reflect():
    cfg = derive(1, 9, 3, 1 / 3, 0.5)
    for m in range(1, 5):
        a = np.sort(levels(m, cfg).values)
        b = np.sort(-levels(-m, cfg).values)
        assert np.allclose(a, b, atol=1e-14)


def test_levels_match_energy_differences():
    from fermieq.observables import level_differences
    cfg = derive(2, 7, 3, 1 / 3, 0.5)
    for m in [(1, 0), (2, -3), (0, 1)]:
        assert np.allclose(levels(m, cfg).values, np.sort(level_differences(m, cfg)), atol=1e-13)


def test_omega_count_example():
    cfg = derive(1, 9, 3, 1 / 3, 0.5)
    assert omega_count(1, 0.0, 20.0, cfg) == 1
    # brute force
    v = levels(1, cfg).values
    assert np.sum(np.abs(v) < 1 / 20) == 1
    assert omega_count(1, 4 * math.sin(math.pi / 9) + 0.06, 20.0, cfg) == 0


def test_scaled_count_even():
    L = 101
    x = np.linspace(-1.2, 1.2, 301)
    for m in (1, 2, 7):
        assert np.array_equal(omega_scaled_count(m, x, 0.01, L), omega_scaled_count(m, -x, 0.01, L))


@pytest.mark.parametrize("m,tau,L,d", [(1, 5.0, 21, 1), (3, 0.7, 21, 1), ((1, 2), 3.0, 9, 2)])
def test_profile_matches_counting(m, tau, L, d):
    cfg = derive(d, L, 3, 0.5, 0.1)
    prof = spectral.profile(m, tau, cfg)
    rng = np.random.default_rng(1)
    lo, hi = prof.breakpoints[0] - 0.1, prof.breakpoints[-1] + 0.1
    E = rng.uniform(lo, hi, 1000)
    direct = np.array([omega_count(m, e, tau, cfg) for e in E])
    assert np.array_equal(prof(E), direct)
    assert prof.total_variation() == 2 * len(levels(m, cfg))
    assert np.all(prof.counts >= 0)


@pytest.mark.parametrize("m,tau,d,L", [(1, 3.0, 1, 21), (4, 0.4, 1, 21), ((1, 1), 2.0, 2, 9),
                                       ((0, 2, 1), 5.0, 3, 5)])
def test_sum_rule_and_lower_bound(m, tau, d, L):
    cfg = derive(d, L, 1, 0.5, 0.1)
    jm = jm_exact(m, tau, cfg)
    assert jm.levels_integral == pytest.approx(cfg.V, rel=1e-9)
    assert jm.value >= cfg.V * (1 - 1e-12)
    prof = spectral.profile(m, tau, cfg)
    assert tau / 2 * prof.integral(1) == pytest.approx(cfg.V, rel=1e-9)
    assert tau / 2 * prof.integral(2) == pytest.approx(jm.value, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 60).map(lambda k: 2 * k + 1), st.integers(1, 20), st.floats(0.05, 50))
def test_jm_1d_vs_pairwise(L, m, tau):
    m = min(m, (L - 1) // 2)
    cfg = derive(1, L, 1, 0.5, 0.1)
    assert jm_1d(m, tau, L).value == pytest.approx(jm_pairwise(levels(m, cfg).values, tau), rel=1e-10)


def test_jm_backends(backend):
    for m in (1, 17, 400):
        J = jm_1d(m, 3 * 1001.0, 1001, backend).value
        ref = jm_pairwise(levels(m, derive(1, 1001, 1, 0.5, 0.1)).values, 3 * 1001.0)
        assert J == pytest.approx(ref, rel=1e-10)


def test_schwarz_step():
    rng = np.random.default_rng(5)
    for _ in range(30):
        a = np.sort(rng.uniform(-2, 2, rng.integers(3, 40)))
        b = np.sort(rng.uniform(-2, 2, rng.integers(3, 40)))
        tau = rng.uniform(0.3, 10)
        lhs = cross_integral(a, b, tau)
        assert lhs <= math.sqrt(jm_pairwise(a, tau) * jm_pairwise(b, tau)) * (1 + 1e-12)


def test_lemma5_values():
    assert lemma5_bound(0.0, 0.1, 101) == pytest.approx(101 * 0.1 + 2)
    d = 1 / 25
    assert lemma5_bound(1 - d, d, 101) == pytest.approx(101 * d / math.sqrt(1 - (1 - d) ** 2) + 2)
    assert lemma5_bound(1.2, 0.1, 101) == 0.0
    with pytest.raises(ValueError):
        lemma5_bound(0.0, 0.6, 101)


@pytest.mark.parametrize("L", [101, 1001])
def test_lemma5_holds(L):
    for m in (1, 2, 5, L // 3):
        for delta in (1 / 25, 1e-3, 1e-5):
            x = np.linspace(-1 - delta, 1 + delta, 2000)
            assert np.all(omega_scaled_count(m, x, delta, L) <= lemma5_bound(x, delta, L))


def test_lemma6_example():
    L = 10001
    jm = jm_1d(1, 3 * L, L)
    assert jm.value <= lemma6_bound(1, 3 * L, L)
    assert spectral.hypothesis_ok(L, 3 * L)
    assert not spectral.hypothesis_ok(10000, 3e4)
    # the hypotheses force delta = 1/(|C_m| tau) below 1/25
    assert 1 / (abs(spectral.c_m(1, L)) * 2 * L) < 1 / 25


def test_lemma7_example():
    cfg = derive(2, 51, 17, 1 / 3, 0.5)
    tau = 3 * 51
    assert jm_exact((1, 0), tau, cfg).value <= lemma7_rhs((1, 0), tau, cfg) * (1 + 1e-12)
    assert spectral.leading_component((2, -2)) == 0
    assert spectral.leading_component((1, -3, 3)) == 1


def test_log_delta_sum():
    assert log_delta_sum(1 / 25) == pytest.approx(-0.5051150250951626, abs=1e-12)
    assert np.all(log_delta_sum(np.linspace(1e-9, 1 / 25, 1000)) < 0)


def test_arcsin_gap():
    rng = np.random.default_rng(0)
    delta = rng.uniform(1e-6, 0.5, 5000)
    x = rng.uniform(0, 1, 5000) * (1 - delta)
    gap, bound = arcsin_gap(x, delta)
    assert np.all(gap <= bound * (1 + 1e-12))


def test_y_function():
    rng = np.random.default_rng(2)
    delta = rng.uniform(1e-4, 0.5, 4000)
    x = rng.uniform(0, 1, 4000) * (1 - delta)
    theta = np.arcsin(x + delta)
    eps = theta - np.arcsin(x - delta)
    assert np.all(y_function(theta, eps) >= -1e-12)
    dY = y_derivative(theta, eps)
    assert np.all(dY <= 1e-12)
    h = 1e-6
    fd = (y_function(theta + h, eps) - y_function(theta - h, eps)) / (2 * h)
    assert np.allclose(dY, fd, atol=1e-5)
    # value at the right end of the theta range
    e = np.linspace(0.01, math.pi / 2, 50)
    ref = (8 - 3 * e**2 - (8 + e**2) * np.cos(e)) / (3 + np.cos(e))
    assert np.allclose(y_function(math.pi / 2, e), ref, atol=1e-13)


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_footnote_identity(a, b, c):
    a = min(a, b + c)
    assert a * a <= b * b + 2 * a * c + 1e-9


def test_profile_from_levels_degenerate():
    prof = SpectralProfile.from_levels(np.array([0.0, 0.0, 1.0]), 2.0)
    assert prof.integral(1) == pytest.approx(3.0)
    assert prof(np.array([0.0]))[0] == 2
