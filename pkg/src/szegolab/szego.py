"""Restricted traces ``Tr_L phi(a_L(H))`` and their truncation diagnostics.

``a(H)`` for the infinite-volume operator is approximated by ``a(H)`` on the
outer box ``[-M-B, M+B]`` (open boundaries), and the restriction ``a_L(H)``
is its central ``(2M+1) x (2M+1)`` block. Off-diagonal entries of ``a(H)``
decay quickly for smooth ``a``, so the inner block converges rapidly in the
buffer width ``B``.

All functions take potentials as plain arrays laid out from the leftmost site
of the outer box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .eigen import eig_tridiagonal, trace_function
from .model import PotentialDistribution, SeedPolicy, build_hamiltonian, sample_potential
from .symbols import Symbol

__all__ = [
    "BufferedBoxSpec",
    "DecayProfile",
    "symbol_restriction",
    "adaptive_restriction",
    "szego_trace",
    "gamma_site_value",
    "gamma_diagonal",
    "trace_gamma",
    "truncation_gap",
    "offdiagonal_decay_profile",
    "loglog_slope",
    "window_insensitivity",
]

DEFAULT_BUFFER = 64
ADAPTIVE_TOL = 1e-10


@dataclass(frozen=True)
class BufferedBoxSpec:
    """Inner box ``[-M, M]`` padded by ``B`` sites on each side."""

    M: int
    B: int = DEFAULT_BUFFER
    adaptive_tol: float | None = None

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("M must be nonnegative")
        if self.B < 0:
            raise ValueError("buffer B must be nonnegative")

    @property
    def inner_size(self) -> int:
        return 2 * self.M + 1

    @property
    def outer_half_width(self) -> int:
        return self.M + self.B

    @property
    def outer_size(self) -> int:
        return 2 * (self.M + self.B) + 1

    @property
    def inner_slice(self) -> slice:
        return slice(self.B, self.B + self.inner_size)


def _check_length(potential, spec: BufferedBoxSpec) -> np.ndarray:
    v = np.asarray(potential, dtype=float)
    if v.ndim != 1 or len(v) != spec.outer_size:
        raise ValueError(f"potential has length {v.size}, outer box needs {spec.outer_size}")
    return v


def _sparse_h(v: np.ndarray) -> sp.csr_matrix:
    n = len(v)
    off = -np.ones(n - 1)
    return sp.diags([off, v, off], [-1, 0, 1], format="csr")


def _matrix_polynomial(h, coeffs):
    """Horner evaluation of ``sum_k c_k h^k`` (dense or sparse ``h``)."""
    n = h.shape[0]
    if sp.issparse(h):
        eye = sp.identity(n, format="csr")
        out = coeffs[-1] * eye
        for c in reversed(coeffs[:-1]):
            out = (out @ h + c * eye).tocsr()
        return out
    out = coeffs[-1] * np.eye(n)
    for c in reversed(coeffs[:-1]):
        out = out @ h
        out[np.diag_indices(n)] += c
    return out


def _poly_block(v: np.ndarray, a: Symbol, spec: "BufferedBoxSpec") -> sp.csr_matrix:
    """Inner block of a polynomial ``a(H)``; degree ``q`` needs only ``q`` buffer sites."""
    q = len(a.poly) - 1
    pad = min(spec.B, q)
    sub = v[spec.B - pad: spec.B + spec.inner_size + pad]
    full = _matrix_polynomial(_sparse_h(sub), a.poly)
    return full[pad:pad + spec.inner_size, pad:pad + spec.inner_size].tocsr()


def _full_function(v: np.ndarray, a: Symbol) -> np.ndarray:
    """``a(H)`` on the whole box with diagonal ``v``."""
    if a.poly is not None:
        return _matrix_polynomial(_sparse_h(v), a.poly).toarray()
    E = eig_tridiagonal(build_hamiltonian(v))
    a.validate_on(E.values[0], E.values[-1])
    fv = a(E.values)
    out = (E.vectors * fv) @ E.vectors.T
    return 0.5 * (out + out.T)


def symbol_restriction(potential, a: Symbol, spec: BufferedBoxSpec) -> np.ndarray:
    """Central ``(2M+1) x (2M+1)`` block of ``a(H)`` computed on the outer box."""
    v = _check_length(potential, spec)
    s = spec.inner_slice
    if a.poly is not None:
        return _poly_block(v, a, spec).toarray()
    E = eig_tridiagonal(build_hamiltonian(v, -spec.outer_half_width))
    a.validate_on(E.values[0], E.values[-1])
    q_in = E.vectors[s]
    out = (q_in * a(E.values)) @ q_in.T
    return 0.5 * (out + out.T)


def adaptive_restriction(potential_on: Callable[[int, int], np.ndarray], a: Symbol, M: int,
                         tol: float = ADAPTIVE_TOL, B0: int = 8, B_max: int = 4096) -> tuple[np.ndarray, int]:
    """Double the buffer until the inner block changes by less than ``tol`` (max entry).

    ``potential_on(lo, hi)`` returns the potential on sites ``lo..hi`` of one
    fixed realization. Returns the block and the buffer width used.
    """
    B = B0
    spec = BufferedBoxSpec(M, B)
    prev = symbol_restriction(potential_on(-M - B, M + B), a, spec)
    while True:
        B2 = 2 * B
        if B2 > B_max:
            raise RuntimeError(f"buffer did not converge to {tol:g} by B={B}")
        spec = BufferedBoxSpec(M, B2)
        cur = symbol_restriction(potential_on(-M - B2, M + B2), a, spec)
        if np.max(np.abs(cur - prev)) < tol:
            return cur, B2
        prev, B = cur, B2


def szego_trace(potential, a: Symbol, phi: Symbol, spec: BufferedBoxSpec) -> float:
    """``Tr_L phi(a_L(H))``.

    Polynomial ``a`` and ``phi`` are evaluated exactly with sparse matrix
    arithmetic; otherwise the trace is the sum of ``phi`` over the eigenvalues
    of the restricted block.
    """
    if a.poly is not None:
        block = _poly_block(_check_length(potential, spec), a, spec)
        if phi.poly is not None:
            return math.fsum(_matrix_polynomial(block, phi.poly).diagonal())
        block = block.toarray()
    else:
        block = symbol_restriction(potential, a, spec)
    if phi.poly is not None:
        return math.fsum(np.diag(_matrix_polynomial(block, phi.poly)))
    vals = np.linalg.eigvalsh(block)
    phi.validate_on(vals[0], vals[-1])
    return trace_function(vals, phi)


def gamma_site_value(window, gamma: Symbol, B: int | None = None) -> float:
    """``gamma(H_window)`` at the central site of a window of ``2B+1`` sites."""
    w = np.asarray(window, dtype=float)
    if len(w) % 2 != 1 or (B is not None and len(w) != 2 * B + 1):
        raise ValueError(f"window must have 2B+1 sites, got {len(w)}")
    c = len(w) // 2
    if gamma.poly is not None:
        return float(_matrix_polynomial(_sparse_h(w), gamma.poly)[c, c])
    E = eig_tridiagonal(build_hamiltonian(w))
    gamma.validate_on(E.values[0], E.values[-1])
    return math.fsum(gamma(E.values) * E.vectors[c] ** 2)


def gamma_diagonal(potential, gamma: Symbol, B: int, centers=None, chunk: int = 1024) -> np.ndarray:
    """Windowed diagonal entries ``gamma(H_[j-B, j+B])_jj`` for many centers at once.

    ``centers`` are indices into ``potential`` (default: every index with a
    full window). Windows are diagonalized in stacked batches.
    """
    v = np.asarray(potential, dtype=float)
    n_w = 2 * B + 1
    if centers is None:
        centers = np.arange(B, len(v) - B)
    centers = np.asarray(centers, dtype=int)
    if centers.size and (centers.min() < B or centers.max() >= len(v) - B):
        raise ValueError("every center needs B sites on each side")
    if gamma.poly is not None and len(gamma.poly) - 1 <= 2 * B + 1:
        # a closed walk of length <= 2B+1 never leaves the window, so the
        # windowed diagonal equals the diagonal over the whole chain
        return np.asarray(_matrix_polynomial(_sparse_h(v), gamma.poly).diagonal()[centers], dtype=float)
    windows = np.lib.stride_tricks.sliding_window_view(v, n_w)
    out = np.empty(centers.size)
    hop = np.zeros((n_w, n_w))
    i = np.arange(n_w - 1)
    hop[i, i + 1] = hop[i + 1, i] = -1.0
    diag = np.arange(n_w)
    for start in range(0, centers.size, chunk):
        sel = windows[centers[start:start + chunk] - B]
        if gamma.poly is not None:
            out[start:start + len(sel)] = [
                _matrix_polynomial(_sparse_h(w), gamma.poly)[B, B] for w in sel
            ]
            continue
        h = np.broadcast_to(hop, (len(sel), n_w, n_w)).copy()
        h[:, diag, diag] = sel
        w, q = np.linalg.eigh(h)
        gamma.validate_on(float(w.min()), float(w.max()))
        out[start:start + len(sel)] = np.einsum("bk,bk->b", gamma(w), q[:, B, :] ** 2)
    return out


def trace_gamma(potential, gamma: Symbol, spec: BufferedBoxSpec) -> float:
    """``sum_{j in L} gamma(H_outer)_jj`` (uncentered)."""
    v = _check_length(potential, spec)
    s = spec.inner_slice
    if gamma.poly is not None:
        return math.fsum(_matrix_polynomial(_sparse_h(v), gamma.poly).diagonal()[s])
    E = eig_tridiagonal(build_hamiltonian(v))
    gamma.validate_on(E.values[0], E.values[-1])
    weights = np.sum(E.vectors[s] ** 2, axis=0)
    return math.fsum(gamma(E.values) * weights)


def truncation_gap(potential, a: Symbol, phi: Symbol, M: int, B: int = DEFAULT_BUFFER) -> tuple[float, float]:
    """``|Tr_L phi(a_L(H)) - Tr_L gamma(H)|`` and the same divided by ``|L|^(1/2)``."""
    from .symbols import compose

    spec = BufferedBoxSpec(M, B)
    gap = abs(szego_trace(potential, a, phi, spec) - trace_gamma(potential, compose(phi, a), spec))
    return gap, gap / math.sqrt(spec.inner_size)


@dataclass
class DecayProfile:
    distance: np.ndarray
    max_abs_entry: np.ndarray

    def rows(self):
        return list(zip(self.distance.tolist(), self.max_abs_entry.tolist()))


def offdiagonal_decay_profile(potential, a: Symbol, spec: BufferedBoxSpec, d_max: int | None = None) -> DecayProfile:
    """``max_{|j-k|=d} |a(H)_jk|`` over pairs at least ``B/2`` sites from the outer boundary."""
    v = _check_length(potential, spec)
    full = _full_function(v, a)
    n = len(v)
    margin = spec.B // 2
    idx = np.arange(margin, n - margin)
    if d_max is None:
        d_max = len(idx) - 1
    d_max = min(d_max, len(idx) - 1)
    inner = full[np.ix_(idx, idx)]
    ds = np.arange(d_max + 1)
    vals = np.array([np.max(np.abs(np.diagonal(inner, d))) for d in ds])
    return DecayProfile(ds, vals)


def loglog_slope(profile: DecayProfile, d_lo: int, d_hi: int, floor: float = 1e-14) -> float:
    """Least-squares slope of ``log|entry|`` against ``log d`` on ``[d_lo, d_hi]``.

    Points at or below ``floor`` (round-off level) are dropped.
    """
    d, m = profile.distance, profile.max_abs_entry
    keep = (d >= d_lo) & (d <= d_hi) & (m > floor)
    if np.count_nonzero(keep) < 2:
        return -math.inf
    slope, _ = np.polyfit(np.log(d[keep]), np.log(m[keep]), 1)
    return float(slope)


def window_insensitivity(gamma: Symbol, dist: PotentialDistribution, p_list, outer_half_width: int,
                         n_pairs: int, seed: SeedPolicy | int = 0,
                         independent_outside: bool = True) -> list[tuple[int, float]]:
    """Mean ``|gamma(H1)_00 - gamma(H2)_00|`` for potentials agreeing on ``[-p, p]``.

    Both potentials live on ``[-L, L]`` with ``L = outer_half_width``; outside
    ``[-p, p]`` the second one is drawn independently (or copied from the
    first when ``independent_outside`` is false).
    """
    L = int(outer_half_width)
    if not isinstance(seed, SeedPolicy):
        seed = SeedPolicy(seed)
    first = [sample_potential(dist, (-L, L), seed, i) for i in range(n_pairs)]
    other = [sample_potential(dist, (-L, L), seed, n_pairs + i) for i in range(n_pairs)]
    base = np.array([gamma_site_value(v, gamma) for v in first])
    out = []
    for p in p_list:
        if not 0 <= p < L:
            raise ValueError(f"p={p} must satisfy 0 <= p < outer_half_width={L}")
        diffs = []
        for i in range(n_pairs):
            v2 = other[i].copy() if independent_outside else first[i].copy()
            v2[L - p: L + p + 1] = first[i][L - p: L + p + 1]
            diffs.append(abs(base[i] - gamma_site_value(v2, gamma)))
        out.append((int(p), float(np.mean(diffs))))
    return out
