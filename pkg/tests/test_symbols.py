import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szegolab.symbols import (
    compose,
    constant_symbol,
    fermi,
    fourier_decay_probe,
    identity_symbol,
    indicator,
    log_shift,
    polynomial,
    renyi,
    resolvent,
    symbol_from_dict,
    von_neumann,
)


def fd_check(s, xs, h=1e-6):
    fd = (s(xs + h) - s(xs - h)) / (2 * h)
    d = s.derivative(xs)
    assert np.all(np.abs(fd - d) <= 1e-6 * (1 + np.abs(d))), np.max(np.abs(fd - d))


def test_fermi():
    f = fermi(1.0, 0.0)
    assert f(np.array(0.0)) == 0.5
    assert f(np.array(1e3)) < 1e-300 and f(np.array(-1e3)) == 1.0
    f3 = fermi(3.0, 0.0)
    lam = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(f3(lam) + f3(-lam), 1.0, atol=1e-15)
    with pytest.raises(ValueError):
        fermi(0.0)
    with pytest.raises(ValueError):
        fermi(-1.0)


def test_renyi_examples():
    assert renyi(2)(np.array(0.5)) == pytest.approx(1.0, abs=1e-15)
    for alpha in (0.5, 2.0, 3.7):
        assert renyi(alpha)(np.array([0.0, 1.0])).tolist() == [0.0, 0.0]
    assert renyi(1)(np.array(0.5)) == pytest.approx(1.0, abs=1e-15)
    assert renyi(1).name == "von_neumann"
    with pytest.raises(ValueError):
        renyi(0)


def test_von_neumann():
    h = von_neumann()
    assert h(np.array(0.5)) == pytest.approx(1.0, abs=1e-15)
    assert h(np.array([0.0, 1.0])).tolist() == [0.0, 0.0]
    mpmath.mp.dps = 30
    x = mpmath.mpf(1) / 4
    oracle = -x * mpmath.log(x, 2) - (1 - x) * mpmath.log(1 - x, 2)
    assert abs(oracle - (2 - mpmath.mpf(3) / 4 * mpmath.log(3, 2))) < 1e-25
    assert h(np.array(0.25)) == pytest.approx(float(oracle), abs=1e-15)
    assert float(oracle) == pytest.approx(0.811278, abs=1e-6)
    with pytest.raises(ValueError):
        h(np.array(1.5))


def test_simple_symbols():
    assert identity_symbol()(np.array(3.2)) == 3.2
    assert resolvent(10)(np.array(2.0)) == -0.125
    ind = indicator(0.0)
    assert ind(np.array(-1.0)) == 1.0 and ind(np.array(1.0)) == 0.0
    assert ind(np.array(0.0)) == 1.0
    assert not ind.has_derivative
    with pytest.raises(ValueError):
        ind.derivative(np.array(0.3))
    assert log_shift(-5)(np.array(-4.0)) == 0.0


def test_singular_points_rejected_on_spectral_interval():
    with pytest.raises(ValueError, match="singular"):
        resolvent(0.5).validate_on(-3, 3)
    resolvent(10).validate_on(-3, 3)
    with pytest.raises(ValueError):
        log_shift(-2).validate_on(-3, 3)
    log_shift(-10).validate_on(-3, 3)


@pytest.mark.parametrize("s, xs", [
    (fermi(3, 0), np.linspace(-4, 4, 100)),
    (fermi(0.7, 1.2), np.linspace(-4, 4, 100)),
    (renyi(2), np.linspace(0.01, 0.99, 100)),
    (renyi(0.5), np.linspace(0.01, 0.99, 100)),
    (von_neumann(), np.linspace(0.01, 0.99, 100)),
    (resolvent(10), np.linspace(-3, 3, 100)),
    (log_shift(-10), np.linspace(-3, 3, 100)),
    (polynomial([1, -2, 0.5, 0.25]), np.linspace(-3, 3, 100)),
])
def test_derivatives_match_finite_differences(s, xs):
    fd_check(s, xs)


def test_bounds_on_grid():
    x = np.linspace(0, 1, 10**4)
    for s in (renyi(0.5), renyi(2), renyi(5), von_neumann()):
        v = s(x)
        assert v.min() >= 0 and v.max() <= 1 + 1e-15
    v = fermi(3, 0)(np.linspace(-10, 10, 10**4))
    assert v.min() >= 0 and v.max() <= 1


def test_renyi_tends_to_von_neumann():
    x = np.linspace(0.01, 0.99, 99)
    h = von_neumann()(x)
    for alpha in (1 - 1e-4, 1 + 1e-4):
        assert np.max(np.abs(renyi(alpha)(x) - h)) <= 1e-3


def test_compose_examples():
    assert compose(identity_symbol(), fermi(1, 0))(np.array(0.0)) == 0.5
    assert compose(renyi(2), fermi(2.2, 0.4))(np.array(0.4)) == pytest.approx(1.0, abs=1e-15)
    g = compose(renyi(2), fermi(3, 0))
    fd_check(g, np.linspace(-3, 3, 20))
    assert g.smoothness == "analytic"
    assert compose(identity_symbol(), indicator(0)).smoothness == "discontinuous"


def test_compose_range_mismatch():
    with pytest.raises(ValueError):
        compose(renyi(2), identity_symbol())
    with pytest.raises(ValueError):
        compose(resolvent(0.5), fermi(3, 0))


BUILTIN_A = [fermi(3, 0), fermi(1, -0.5), identity_symbol(), polynomial([0, 1, 0.3])]
BUILTIN_PHI = [identity_symbol(), polynomial([1, 0, 2]), resolvent(20), log_shift(-20)]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(BUILTIN_PHI), st.sampled_from(BUILTIN_A), st.floats(-3, 3))
def test_chain_rule_property(phi, a, x):
    try:
        g = compose(phi, a)
    except ValueError:
        return
    fd_check(g, np.array([x]))


def test_entropy_chain_rule():
    for alpha in (0.5, 1.0, 2.0, 3.0):
        fd_check(compose(renyi(alpha), fermi(3, 0)), np.linspace(-3, 3, 25))


def test_polynomial_composition_exact():
    g = compose(polynomial([1, 0, 1]), polynomial([0, 2]))
    assert g.poly == (1.0, 0.0, 4.0)
    assert compose(identity_symbol(), identity_symbol()).poly == (0.0, 1.0)


def test_from_dict():
    g = symbol_from_dict({"kind": "compose", "phi": {"kind": "renyi", "alpha": 2.0},
                          "a": {"kind": "fermi", "beta": 3.0, "fermi_energy": 0.0}})
    ref = compose(renyi(2), fermi(3, 0))
    x = np.linspace(-3, 3, 7)
    np.testing.assert_array_equal(g(x), ref(x))
    assert symbol_from_dict(constant_symbol(2.0).spec)(np.array(9.0)) == 2.0
    with pytest.raises(ValueError):
        symbol_from_dict({"kind": "nope"})


def test_fourier_probe_analytic():
    r = fourier_decay_probe(fermi(3, 0), (-4, 4), 2**14)
    assert r.status == "decaying"
    assert r.exponent > 2


def test_fourier_probe_discontinuous():
    r = fourier_decay_probe(indicator(0), (-4, 4), 2**14)
    assert r.status == "no polynomial decay"
    # jump discontinuity: magnitudes ~ 1/k
    assert r.exponent == pytest.approx(1.0, abs=0.2)


def test_fourier_probe_constant():
    r = fourier_decay_probe(constant_symbol(1.3), (-4, 4), 2**12)
    assert r.status == "flat"
    assert np.all(r.magnitudes[1:] < 1e-14)
