import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from oracles import FOUR_SIGMA_P, worst_bin
from qlidar import DomainError, Pmf, pmf_convolve, pmf_moments, pmf_poisson, pmf_sample, pmf_thermal
from qlidar.photon_statistics import TAIL_MASS, auto_m_max
from qlidar.streams import CounterStream


def test_poisson_vacuum():
    p = pmf_poisson(0.0)
    assert p[0] == 1.0
    assert p.probabilities[1:].sum() == 0.0


def test_poisson_closed_form():
    p = pmf_poisson(1.0)
    assert p[0] == pytest.approx(math.exp(-1), abs=1e-12)
    assert p[1] == pytest.approx(math.exp(-1), abs=1e-12)


def test_poisson_mean_auto_truncation():
    assert abs(pmf_poisson(10.0).mean - 10.0) < 1e-6


def test_thermal_closed_form():
    p = pmf_thermal(1.0)
    assert p[0] == pytest.approx(0.5, abs=1e-12)
    assert p[1] == pytest.approx(0.25, abs=1e-12)
    assert p[2] == pytest.approx(0.125, abs=1e-12)
    assert pmf_thermal(0.0)[0] == 1.0


def test_thermal_variance_within_tenth_percent():
    assert abs(pmf_thermal(10.0).variance - 110.0) / 110.0 < 1e-3


@pytest.mark.parametrize("ctor", [pmf_poisson, pmf_thermal])
def test_negative_mean_rejected(ctor):
    with pytest.raises(DomainError):
        ctor(-0.1)


@pytest.mark.parametrize("mu", [0.1, 1.0, 10.0, 20.0])
def test_truncation_tail_below_budget(mu):
    p = pmf_poisson(mu)
    assert stats.poisson.sf(p.m_max, mu) < TAIL_MASS
    assert p.m_max >= auto_m_max(mu, mu)
    t = pmf_thermal(mu)
    ratio = mu / (1 + mu)
    assert ratio ** (t.m_max + 1) < TAIL_MASS


def test_convolve_identity():
    a = pmf_thermal(3.0)
    out = pmf_convolve(a, Pmf.delta(0))
    np.testing.assert_array_equal(out.probabilities, a.probabilities)


def test_convolve_poisson_closure():
    out = pmf_convolve(pmf_poisson(2.0), pmf_poisson(3.5))
    ref = stats.poisson.pmf(np.arange(out.m_max + 1), 5.5)
    assert np.max(np.abs(out.probabilities - ref)) < 1e-9


def test_convolve_poisson_thermal_at_zero():
    out = pmf_convolve(pmf_poisson(1.0), pmf_thermal(1.0))
    assert out[0] == pytest.approx(math.exp(-1) / 2, abs=1e-12)


@given(st.floats(0, 15), st.floats(0, 15))
@settings(max_examples=40, deadline=None)
def test_convolve_means_add(mu1, mu2):
    a, b = pmf_poisson(mu1), pmf_thermal(mu2)
    out = pmf_convolve(a, b)
    assert abs(out.mean - a.mean - b.mean) < 1e-9
    assert abs(out.probabilities.sum() - 1) < 1e-9


def test_moments_examples():
    assert pmf_moments(Pmf.delta(0)) == (0.0, 0.0)
    m, v = pmf_moments(pmf_poisson(1.0))
    assert m == pytest.approx(1.0, abs=1e-9) and v == pytest.approx(1.0, abs=1e-9)
    m, v = pmf_moments(pmf_thermal(1.0))
    assert m == pytest.approx(1.0, abs=1e-9) and v == pytest.approx(2.0, abs=1e-9)


def test_pmf_validation():
    with pytest.raises(DomainError):
        Pmf([0.5, 0.4])
    with pytest.raises(DomainError):
        Pmf([1.5, -0.5])
    with pytest.raises(DomainError):
        Pmf([])
    p = Pmf([0.25, 0.75])
    with pytest.raises(ValueError):
        p.probabilities[0] = 1.0


def test_tail_and_indexing():
    p = pmf_thermal(1.0)
    assert p.tail(0) == 1.0
    assert p.tail(6) == pytest.approx(2.0**-6, abs=1e-12)
    assert p[p.m_max + 5] == 0.0


def test_sample_delta():
    rng = np.random.default_rng(0)
    assert np.all(pmf_sample(Pmf.delta(0), rng, 1000) == 0)
    assert pmf_sample(Pmf.delta(3), rng) == 3


def test_sample_fair_coin_mean():
    rng = np.random.default_rng(12)
    draws = pmf_sample(Pmf([0.5, 0.5]), rng, 10**6)
    assert abs(draws.mean() - 0.5) < 0.002


def test_sample_boundaries_of_cdf():
    class Fixed:
        def __init__(self, u):
            self.u = u

        def random(self, size=None):
            return self.u

    p = Pmf([0.25, 0.5, 0.25])
    assert pmf_sample(p, Fixed(0.0)) == 0
    assert pmf_sample(p, Fixed(0.25)) == 1
    assert pmf_sample(p, Fixed(np.nextafter(0.75, 0))) == 1
    assert pmf_sample(p, Fixed(0.75)) == 2
    assert pmf_sample(p, Fixed(np.nextafter(1.0, 0))) == 2


def test_sample_reproducible_from_stream():
    p = pmf_thermal(2.0)
    a = pmf_sample(p, CounterStream(1234), 1000)
    b = pmf_sample(p, CounterStream(1234), 1000)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("pmf", [pmf_poisson(3.0), pmf_thermal(1.0), pmf_poisson(11.0)], ids=["poisson3", "thermal1", "poisson11"])
def test_sample_goodness_of_fit(pmf):
    draws = pmf_sample(pmf, CounterStream(99), 10**6)
    worst, where = worst_bin(draws, pmf.probabilities)
    assert worst > FOUR_SIGMA_P, f"bin {where} off: p-value {worst:.3g}"
