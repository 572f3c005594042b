import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szegolab.model import PotentialDistribution as PD, build_hamiltonian, sample_potential
from szegolab.symbols import (
    Symbol,
    compose,
    constant_symbol,
    fermi,
    identity_symbol,
    linear_combination,
    polynomial,
    renyi,
    resolvent,
)
from szegolab.szego import (
    BufferedBoxSpec,
    gamma_diagonal,
    gamma_site_value,
    loglog_slope,
    offdiagonal_decay_profile,
    symbol_restriction,
    szego_trace,
    trace_gamma,
    truncation_gap,
    window_insensitivity,
)

U1 = PD.uniform(1.0)
ID = identity_symbol()


def pot(spec, seed=0, dist=U1, r=0):
    h = spec.outer_half_width
    return sample_potential(dist, (-h, h), seed, r)


def as_callable(f):
    """Plain-function copy of a symbol, hiding its polynomial fast path."""
    return Symbol("opaque " + f.name, f.func, f.deriv, f.domain, f.value_range)


def test_spec_geometry():
    s = BufferedBoxSpec(3, 5)
    assert s.outer_size == 2 * (3 + 5) + 1 and s.inner_size == 7
    with pytest.raises(ValueError):
        BufferedBoxSpec(-1)


@pytest.mark.parametrize("B", [0, 1, 7])
def test_identity_restriction_exact(B):
    spec = BufferedBoxSpec(5, B)
    v = pot(spec)
    block = symbol_restriction(v, ID, spec)
    expected = build_hamiltonian(v[B:B + 11]).to_dense()
    assert np.array_equal(block, expected)


def test_identity_restriction_through_eigensolver():
    spec = BufferedBoxSpec(5, 6)
    v = pot(spec)
    block = symbol_restriction(v, as_callable(ID), spec)
    np.testing.assert_allclose(block, build_hamiltonian(v[6:17]).to_dense(), atol=1e-13)


def test_constant_restriction():
    spec = BufferedBoxSpec(4, 3)
    block = symbol_restriction(pot(spec), constant_symbol(1.5), spec)
    assert np.array_equal(block, 1.5 * np.eye(9))


def test_fermi_free_center():
    spec = BufferedBoxSpec(0, 64)
    block = symbol_restriction(np.zeros(spec.outer_size), fermi(3, 0), spec)
    assert block.shape == (1, 1)
    assert block[0, 0] == pytest.approx(0.5, abs=1e-13)


def test_szego_trace_examples():
    spec = BufferedBoxSpec(6, 4)
    v = pot(spec)
    assert szego_trace(v, ID, ID, spec) == math.fsum(v[4:17])
    spec1 = BufferedBoxSpec(1, 3)
    # free 3x3 block: Tr(H^2) = sum_ij H_ij^2 = 4
    assert szego_trace(np.zeros(spec1.outer_size), ID, polynomial([0, 0, 1]), spec1) == 4.0
    assert szego_trace(np.zeros(spec1.outer_size), as_callable(ID), as_callable(polynomial([0, 0, 1])),
                       spec1) == pytest.approx(4.0, abs=1e-13)
    spec0 = BufferedBoxSpec(0, 64)
    assert szego_trace(np.zeros(spec0.outer_size), fermi(3, 0), renyi(2), spec0) == pytest.approx(1.0, abs=1e-12)


def test_length_mismatch():
    with pytest.raises(ValueError, match="outer box"):
        szego_trace(np.zeros(5), ID, ID, BufferedBoxSpec(3, 1))


def test_resolvent_pole_inside_spectrum():
    spec = BufferedBoxSpec(3, 3)
    with pytest.raises(ValueError, match="singular"):
        szego_trace(pot(spec), resolvent(0.0), ID, spec)
    tr = szego_trace(pot(spec), resolvent(10.0), ID, spec)
    assert np.isfinite(tr)


def test_gamma_site_value_examples():
    w = sample_potential(U1, (-5, 5), 3, 0)
    assert gamma_site_value(w, constant_symbol(2.5), B=5) == 2.5
    assert gamma_site_value(w, ID) == w[5]
    assert gamma_site_value(w, as_callable(ID)) == pytest.approx(w[5], abs=1e-14)
    for B in (1, 4, 30):
        assert gamma_site_value(np.zeros(2 * B + 1), fermi(3, 0)) == pytest.approx(0.5, abs=1e-13)
    with pytest.raises(ValueError):
        gamma_site_value(np.zeros(4), ID)


def test_gamma_diagonal_matches_single_windows():
    v = sample_potential(U1, (0, 99), 2, 0)
    g = compose(renyi(2), fermi(3, 0))
    batch = gamma_diagonal(v, g, 10, centers=[10, 50, 89])
    single = [gamma_site_value(v[c - 10:c + 11], g) for c in (10, 50, 89)]
    np.testing.assert_allclose(batch, single, atol=1e-13)


def test_trace_gamma_examples():
    spec = BufferedBoxSpec(8, 5)
    v = pot(spec)
    assert trace_gamma(v, constant_symbol(0.3), spec) == pytest.approx(0.3 * 17, abs=1e-14)
    assert trace_gamma(v, ID, spec) == math.fsum(v[5:22])


def test_trace_gamma_buffer_convergence():
    g = compose(renyi(2), fermi(3, 0))
    v64 = pot(BufferedBoxSpec(8, 64), seed=5)
    v32 = v64[32:-32]
    assert trace_gamma(v32, g, BufferedBoxSpec(8, 32)) == pytest.approx(
        trace_gamma(v64, g, BufferedBoxSpec(8, 64)), abs=1e-8)


def test_truncation_gap_trivial():
    spec = BufferedBoxSpec(10, 8)
    v = pot(spec)
    assert truncation_gap(v, ID, ID, 10, 8)[0] == 0.0
    gap, _ = truncation_gap(v, constant_symbol(0.4), renyi(2), 10, 8)
    assert gap <= 1e-12


def test_linearity_in_phi():
    spec = BufferedBoxSpec(12, 16)
    a = fermi(2, 0.3)
    p1, p2 = renyi(2), compose(polynomial([0, 0, 1]), identity_symbol())
    combo = linear_combination([(0.7, p1), (-1.3, p2)])
    for seed in range(3):
        v = pot(spec, seed)
        lhs = szego_trace(v, a, combo, spec)
        rhs = 0.7 * szego_trace(v, a, p1, spec) - 1.3 * szego_trace(v, a, p2, spec)
        assert abs(lhs - rhs) <= 1e-9 * spec.inner_size


def test_phi_identity_equals_diagonal_sum():
    spec = BufferedBoxSpec(10, 20)
    a = fermi(3, 0)
    for seed in range(3):
        v = pot(spec, seed)
        assert szego_trace(v, a, ID, spec) == pytest.approx(trace_gamma(v, a, spec), abs=1e-10 * spec.inner_size)


def test_buffer_geometric_convergence():
    a, phi = fermi(3, 0), renyi(2)
    Bs = [8, 16, 32, 64, 128]
    big = pot(BufferedBoxSpec(6, 128), seed=7)
    tr = [szego_trace(big[128 - B: len(big) - 128 + B], a, phi, BufferedBoxSpec(6, B)) for B in Bs]
    diffs = [abs(tr[i] - tr[i + 1]) for i in range(len(Bs) - 1)]
    # stop once both ends sit at round-off level
    for d0, d1 in zip(diffs, diffs[1:]):
        if d0 < 1e-12:
            break
        assert d1 <= 0.5 * d0 or d1 < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32))
def test_restriction_eigenvalues_within_symbol_range(seed):
    spec = BufferedBoxSpec(15, 10)
    block = symbol_restriction(pot(spec, seed), fermi(3, 0), spec)
    ev = np.linalg.eigvalsh(block)
    assert ev.min() >= -1e-12 and ev.max() <= 1 + 1e-12


def test_decay_profile_polynomial():
    spec = BufferedBoxSpec(20, 10)
    v = pot(spec)
    prof = offdiagonal_decay_profile(v, ID, spec, d_max=6)
    assert prof.max_abs_entry[1] == 1.0 and np.all(prof.max_abs_entry[2:] == 0.0)
    prof = offdiagonal_decay_profile(v, polynomial([0.5, 1, -1, 2]), spec, d_max=8)
    assert prof.max_abs_entry[3] > 0 and np.all(prof.max_abs_entry[4:] == 0.0)


def test_decay_profile_fermi_slope():
    spec = BufferedBoxSpec(60, 64)
    prof = offdiagonal_decay_profile(pot(spec, 3), fermi(3, 0), spec, d_max=60)
    assert loglog_slope(prof, 5, 40) <= -2


def test_window_insensitivity_trivial():
    g = compose(renyi(2), fermi(3, 0))
    same = window_insensitivity(g, U1, [0, 3, 8], 12, 4, seed=1, independent_outside=False)
    assert all(v == 0.0 for _, v in same)
    ident = window_insensitivity(ID, U1, [0, 2, 5], 10, 5, seed=1)
    assert all(v == 0.0 for _, v in ident)
    with pytest.raises(ValueError):
        window_insensitivity(ID, U1, [10], 10, 2)


@pytest.mark.parametrize("coeffs", [[0, 1], [0.3, -1, 0.5], [1, 0, 0, 0, 0, 0.2]])
def test_gamma_diagonal_polynomial_path(coeffs):
    B = 2
    v = sample_potential(U1, (0, 40), 6, 0)
    p = polynomial(coeffs)
    fast = gamma_diagonal(v, p, B)
    slow = gamma_diagonal(v, as_callable(p), B)
    np.testing.assert_allclose(fast, slow, atol=1e-12)
