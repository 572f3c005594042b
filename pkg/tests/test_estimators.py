import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szegolab.estimators import (
    VarianceEstimate,
    autocovariances,
    correlation_sum_sigma2,
    free_ids,
    ids_cdf,
    martingale_sigma2,
    positivity_check,
    spectral_average,
)
from szegolab.model import PotentialDistribution as PD
from szegolab.symbols import compose, constant_symbol, fermi, identity_symbol, indicator, polynomial, renyi

U1 = PD.uniform(1.0)
ID = identity_symbol()


def test_free_ids_values():
    np.testing.assert_allclose(free_ids([-3, -2, 0, 2, 3]), [0, 0, 0.5, 1, 1], atol=1e-15)
    # symmetric spectrum of H0
    E = np.linspace(-2, 2, 17)
    np.testing.assert_allclose(free_ids(E) + free_ids(-E), 1.0, atol=1e-14)


def test_ids_free_box_exact_count():
    # a single free box has eigenvalues -2cos(k pi/(N+1)); count them by hand
    M = 20
    N = 2 * M + 1
    lam = -2 * np.cos(np.arange(1, N + 1) * np.pi / (N + 1))
    E = np.array([-2.5, -1.01, 0.3, 1.9, 2.5])  # away from eigenvalues (-1 is one)
    est = ids_cdf(PD.constant(0.0), E, M, 3, seed=0)
    expected = np.array([np.sum(lam <= e) for e in E]) / N
    np.testing.assert_allclose(est.values, expected, atol=1e-15)
    assert np.all(est.stderr == 0)


def test_ids_monotone_and_bounded():
    E = np.linspace(-3.5, 3.5, 50)
    est = ids_cdf(U1, E, 30, 20, seed=4)
    assert np.all(np.diff(est.values) >= 0)
    assert est.values[0] == 0.0 and est.values[-1] == 1.0
    assert est.box_size == 61 and len(est.rows()) == 50


def test_ids_matches_indicator_average():
    # IDS(E) = E{1(H <= E)_00}: two independent routes
    E = -0.4
    route1 = ids_cdf(U1, [E], 200, 40, seed=1)
    mean, se = spectral_average(U1, indicator(E), 60, 3000, seed=2)
    assert abs(route1.values[0] - mean) <= 4 * math.hypot(route1.stderr[0], se) + 0.01


def test_spectral_average_affine_exact():
    assert spectral_average(U1, constant_symbol(0.25), 5, 10, seed=0) == (0.25, 0.0)
    mean, se = spectral_average(U1, ID, 5, 5000, seed=3)
    assert abs(mean) <= 4 * math.sqrt(1 / 3 / 5000)
    assert se == pytest.approx(math.sqrt(1 / 3 / 5000), rel=0.1)


def test_spectral_average_second_moment():
    # E{(H^2)_00} = 2 + E V0^2
    mean, se = spectral_average(U1, polynomial([0, 0, 1]), 3, 20000, seed=5)
    assert abs(mean - (2 + 1 / 3)) <= 4 * se


def test_autocovariances():
    y = np.array([1.0, -1.0, 1.0, -1.0])
    np.testing.assert_allclose(autocovariances(y, 2), [1.0, -0.75, 0.5])


def test_correlation_identity_is_variance_of_v():
    est = correlation_sum_sigma2(U1, ID, l_max=10, B=2, n_sites=40000, seed=1)
    assert abs(est.sigma2 - 1 / 3) <= 4 * est.stderr
    assert est.stderr > 0


def test_correlation_given_potential():
    v = np.zeros(104)
    v[::2] = 1.0
    est = correlation_sum_sigma2(None, ID, l_max=3, B=2, n_sites=100, potential=v, n_batches=1)
    # alternating +-1/2 sequence
    np.testing.assert_allclose(est.diagnostics["C"], [0.25, -0.2475, 0.245, -0.2425])
    with pytest.raises(ValueError):
        correlation_sum_sigma2(None, ID, l_max=3, B=2, n_sites=100, potential=v[:-1])


def test_correlation_bad_lag():
    with pytest.raises(ValueError):
        correlation_sum_sigma2(U1, ID, l_max=100, n_sites=100)


@pytest.mark.parametrize("c", [0.0, 0.7])
def test_constant_gamma_all_routes_zero(c):
    g = constant_symbol(c)
    assert correlation_sum_sigma2(U1, g, l_max=5, B=3, n_sites=500).sigma2 == 0.0
    assert martingale_sigma2(U1, g, 4, quad_nodes=4, n_outer=5, n_inner=4).sigma2 == 0.0


def test_martingale_identity():
    # A0 = V0, so M0 = V0 - E V0 and sigma^2 = Var V0 (plus the inner-sample bias)
    est = martingale_sigma2(U1, ID, 3, quad_nodes=4, n_outer=2000, n_inner=50, seed=2)
    target = (1 / 3) * (1 + 1 / 50)
    assert abs(est.sigma2 - target) <= 4 * est.stderr
    assert est.diagnostics["inner_bias"] == pytest.approx(1 / 3 / 50, rel=0.15)


def test_martingale_requires_derivative():
    with pytest.raises(ValueError, match="derivative"):
        martingale_sigma2(U1, indicator(0.0))
    with pytest.raises(ValueError):
        martingale_sigma2(U1, ID, n_inner=1)


def test_martingale_deterministic():
    g = compose(renyi(2), fermi(3, 0))
    a = martingale_sigma2(U1, g, 6, quad_nodes=4, n_outer=6, n_inner=5, seed=9)
    b = martingale_sigma2(U1, g, 6, quad_nodes=4, n_outer=6, n_inner=5, seed=9)
    assert a.sigma2 == b.sigma2


def test_martingale_quadrature_converged():
    g = compose(renyi(2), fermi(3, 0))
    e8 = martingale_sigma2(U1, g, 8, quad_nodes=8, n_outer=10, n_inner=10, seed=1)
    e16 = martingale_sigma2(U1, g, 8, quad_nodes=16, n_outer=10, n_inner=10, seed=1)
    assert e8.sigma2 == pytest.approx(e16.sigma2, rel=1e-6)


def test_positivity_check():
    assert positivity_check(VarianceEstimate(1.0, 0.1, "x")).passed
    v = positivity_check(VarianceEstimate(0.2, 0.1, "x"))
    assert not v.passed and "inconclusive" in v.message
    assert not positivity_check(VarianceEstimate(0.0, 0.0, "x")).passed
    assert positivity_check(VarianceEstimate(0.5, 0.0, "x")).ratio == math.inf


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=5, max_size=60), st.integers(0, 4))
def test_autocovariance_lag0_dominates(y, l_max):
    y = np.asarray(y) - np.mean(y)
    l_max = min(l_max, len(y) - 1)
    c = autocovariances(y, l_max)
    assert np.all(np.abs(c) <= c[0] + 1e-12)


def test_identity_three_routes_agree():
    # analytic Var V0 = 1/3, correlation sum and martingale within 3 combined SE
    corr = correlation_sum_sigma2(U1, ID, l_max=20, B=2, n_sites=20000, seed=7)
    mart = martingale_sigma2(U1, ID, 2, quad_nodes=4, n_outer=1500, n_inner=100, seed=7)
    vals = [(1 / 3, 0.0), (corr.sigma2, corr.stderr), (mart.sigma2, mart.stderr)]
    for i in range(3):
        for j in range(i + 1, 3):
            (a, sa), (b, sb) = vals[i], vals[j]
            assert abs(a - b) <= 3 * math.hypot(sa, sb)


def test_martingale_nonnegative_and_window_scan():
    from szegolab.estimators import martingale_window_scan

    g = compose(renyi(2), fermi(3, 0))
    ests = martingale_window_scan(U1, g, widths=(2, 4), quad_nodes=4, n_outer=5, n_inner=4, seed=3)
    assert [e.diagnostics["window_half_width"] for e in ests] == [2, 4]
    assert all(e.sigma2 >= 0 for e in ests)
