import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from dpboot.diagnostics import (
    PLD_PAIR_1,
    GaussianMixture1D,
    pld_delta,
    pld_delta_pair,
    renyi2_divergence,
    zcdp_counterexample,
)


def test_renyi_self():
    p = GaussianMixture1D.unit([1.0], [0.3])
    assert renyi2_divergence(p, p) == pytest.approx(0.0, abs=1e-14)


def test_renyi_shifted_gaussian():
    p = GaussianMixture1D.unit([1.0], [1.0])
    q = GaussianMixture1D.unit([1.0], [0.0])
    assert renyi2_divergence(p, q) == pytest.approx(1.0)


def test_renyi_counterexample():
    expected = math.log((7 + 4 * math.e + 4 * math.e**2 + math.e**4) / 16)
    assert zcdp_counterexample() == pytest.approx(expected, abs=1e-12)
    assert zcdp_counterexample() == pytest.approx(1.85265, abs=1e-5)


def test_renyi_quadrature_general_variances():
    p = GaussianMixture1D([(0.3, -0.5, 0.8), (0.7, 1.0, 1.3)])
    q = GaussianMixture1D([(1.0, 0.2, 1.5)])
    val, _ = integrate.quad(lambda x: p.pdf(x) ** 2 / q.pdf(x), -40, 40, limit=200)
    assert renyi2_divergence(p, q) == pytest.approx(math.log(val), rel=1e-8)


def test_renyi_infinite_when_q_too_narrow():
    p = GaussianMixture1D([(1.0, 0.0, 4.0)])
    q = GaussianMixture1D([(1.0, 0.0, 1.0)])
    assert renyi2_divergence(p, q) == math.inf


def test_renyi_rejects_mixture_q():
    p = GaussianMixture1D.unit([1.0], [0.0])
    q = GaussianMixture1D.unit([0.5, 0.5], [0.0, 1.0])
    with pytest.raises(ValueError):
        renyi2_divergence(p, q)


def test_mixture_validation():
    with pytest.raises(ValueError):
        GaussianMixture1D([(0.5, 0.0, 1.0)])
    with pytest.raises(ValueError):
        GaussianMixture1D([(1.0, 0.0, -1.0)])


def test_pld_constants():
    d1, d2, t1, t3 = pld_delta_pair(1.0)
    assert t1 == pytest.approx(0.2228743, abs=1e-6)
    assert d1 == pytest.approx(0.4475773, abs=1e-6)
    assert t3 == pytest.approx(-0.7830073, abs=1e-6)
    assert d2 == pytest.approx(0.369344, abs=1e-6)
    assert d1 > d2


def test_pld_threshold_solves_ratio():
    fx, fy = PLD_PAIR_1
    _, t = pld_delta(fx, fy, 0.7)
    assert float(fx.logpdf(t) - fy.logpdf(t)) == pytest.approx(0.7, abs=1e-8)


def test_pld_monotone_in_eps():
    vals = np.array([pld_delta_pair(e)[:2] for e in np.linspace(0, 4, 41)])
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.all(np.diff(vals, axis=0) <= 1e-12)


def test_pld_negative_eps():
    with pytest.raises(ValueError):
        pld_delta_pair(-0.1)


@settings(max_examples=200, deadline=None)
@given(
    w=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4),
    m=st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    b=st.floats(-2, 2),
)
def test_renyi_nonnegative(w, m, b):
    w = np.asarray(w) / np.sum(w)
    p = GaussianMixture1D.unit(w, m[: len(w)])
    q = GaussianMixture1D.unit([1.0], [b])
    assert renyi2_divergence(p, q) >= -1e-12
