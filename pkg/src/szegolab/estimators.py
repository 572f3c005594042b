"""Integrated density of states and two routes to the limiting variance.

Correlation route
    ``sigma^2 = sum_l C_l`` with ``C_l`` the autocovariance of the diagonal
    entries ``gamma(H)_jj`` along one long realization.
Martingale route
    ``sigma^2 = E{M0^2}`` where ``M0 = E{A0 | F_0^inf} - E{A0 | F_1^inf}`` and
    ``A0 = V0 int_0^1 gamma'(H|_{V0 -> u V0})_00 du`` is the change in the
    total trace caused by switching the site-0 potential on.

Both routes work on finite windows; how the answer depends on the window is
reported, not assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import eigvals_tridiagonal
from .model import PotentialDistribution, SeedPolicy, build_hamiltonian, sample_potential, spectral_bound
from .symbols import Symbol
from .szego import gamma_diagonal

__all__ = [
    "IdsEstimate",
    "VarianceEstimate",
    "PositivityVerdict",
    "ids_cdf",
    "free_ids",
    "spectral_average",
    "autocovariances",
    "correlation_sum_sigma2",
    "martingale_sigma2",
    "martingale_window_scan",
    "positivity_check",
]


def _seed(seed) -> SeedPolicy:
    return seed if isinstance(seed, SeedPolicy) else SeedPolicy(seed)


def _mean(x: np.ndarray) -> float:
    if x.size and np.all(x == x[0]):
        return float(x[0])
    return math.fsum(x) / x.size


def free_ids(E):
    """IDS of the free Laplacian, ``arccos(-E/2)/pi`` (0 below -2, 1 above 2)."""
    return np.arccos(np.clip(-np.asarray(E, dtype=float) / 2.0, -1.0, 1.0)) / np.pi


@dataclass
class IdsEstimate:
    energies: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_samples: int
    box_size: int

    def rows(self):
        return list(zip(self.energies.tolist(), self.values.tolist(), self.stderr.tolist()))


def ids_cdf(dist: PotentialDistribution, energy_grid, M: int, n_samples: int, seed=0) -> IdsEstimate:
    """Averaged normalized eigenvalue counting function ``#{lambda <= E} / |L|`` of ``H_L``."""
    seed = _seed(seed)
    E = np.asarray(energy_grid, dtype=float)
    size = 2 * M + 1
    counts = np.empty((n_samples, E.size))
    for r in range(n_samples):
        v = sample_potential(dist, (-M, M), seed, r)
        lam = eigvals_tridiagonal(build_hamiltonian(v, -M))
        counts[r] = np.searchsorted(lam, E, side="right") / size
    se = counts.std(axis=0, ddof=1) / math.sqrt(n_samples) if n_samples > 1 else np.zeros(E.size)
    return IdsEstimate(E, counts.mean(axis=0), se, n_samples, size)


def spectral_average(dist: PotentialDistribution, gamma: Symbol, B: int, n_samples: int,
                     seed=0, realization_index: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of ``E{gamma(H)_00}`` and its standard error.

    Samples are disjoint ``2B+1``-site windows of one long realization, hence
    independent.
    """
    seed = _seed(seed)
    lo, hi = spectral_bound(dist)
    gamma.validate_on(lo, hi)
    n_w = 2 * B + 1
    v = sample_potential(dist, (0, n_samples * n_w - 1), seed, realization_index)
    vals = gamma_diagonal(v, gamma, B, centers=B + n_w * np.arange(n_samples))
    mean = _mean(vals)
    if n_samples < 2 or np.all(vals == vals[0]):
        return mean, 0.0
    return mean, float(np.std(vals, ddof=1) / math.sqrt(n_samples))


@dataclass
class VarianceEstimate:
    sigma2: float
    stderr: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"sigma2": self.sigma2, "se": self.stderr, "method": self.method,
                **{k: v for k, v in self.diagnostics.items() if np.isscalar(v)}}


def autocovariances(y: np.ndarray, l_max: int) -> np.ndarray:
    """``C_l = n^-1 sum_j y_j y_{j+l}`` for ``l = 0..l_max`` (``y`` already centered)."""
    n = len(y)
    return np.array([np.dot(y[: n - l], y[l:]) / n for l in range(l_max + 1)])


def correlation_sum_sigma2(dist: PotentialDistribution | None, gamma: Symbol, l_max: int = 50, B: int = 40,
                           n_sites: int = 20000, seed=0, n_batches: int = 20,
                           potential=None, realization_index: int = 0) -> VarianceEstimate:
    """``sigma^2 = C_0 + 2 sum_{l=1}^{l_max} C_l`` from windowed diagonals of one long realization.

    Pass ``potential`` (length ``n_sites + 2B``) to analyse a given realization
    instead of sampling one. The standard error comes from the spread of the
    same estimator over ``n_batches`` contiguous batches.
    """
    if l_max < 0 or l_max >= n_sites:
        raise ValueError(f"need 0 <= l_max < n_sites, got l_max={l_max}, n_sites={n_sites}")
    if potential is None:
        v = sample_potential(dist, (-B, n_sites + B - 1), _seed(seed), realization_index)
    else:
        v = np.asarray(potential, dtype=float)
        if len(v) != n_sites + 2 * B:
            raise ValueError(f"potential must have n_sites + 2B = {n_sites + 2 * B} entries")
    g = gamma_diagonal(v, gamma, B)
    y = g - _mean(g)
    c = autocovariances(y, l_max)
    partial = c[0] + 2.0 * np.concatenate([[0.0], np.cumsum(c[1:])])
    sigma2 = float(partial[-1])

    batch_len = n_sites // n_batches
    se = 0.0
    if n_batches >= 2 and batch_len > l_max:
        est = []
        for b in range(n_batches):
            cb = autocovariances(y[b * batch_len:(b + 1) * batch_len], l_max)
            est.append(cb[0] + 2.0 * cb[1:].sum())
        se = float(np.std(est, ddof=1) / math.sqrt(n_batches))
    return VarianceEstimate(sigma2, se, "correlation_sum", {
        "l_max": l_max, "B": B, "n_sites": n_sites, "n_batches": n_batches,
        "mean_gamma": _mean(g),
        "C": c, "partial_sums": partial,
        # change over the last quarter of the partial sums, a plateau check
        "plateau_drift": float(partial[-1] - partial[(3 * l_max) // 4]) if l_max else 0.0,
    })


def _center_derivative(potentials: np.ndarray, gamma: Symbol, c: int) -> np.ndarray:
    """``gamma'(H)_cc`` for a stack of potentials (rows)."""
    n_b, n = potentials.shape
    h = np.zeros((n_b, n, n))
    i = np.arange(n - 1)
    h[:, i, i + 1] = h[:, i + 1, i] = -1.0
    d = np.arange(n)
    h[:, d, d] = potentials
    w, q = np.linalg.eigh(h)
    gamma.validate_on(float(w.min()), float(w.max()))
    return np.einsum("bk,bk->b", gamma.derivative(w), q[:, c, :] ** 2)


def _a0(v0: np.ndarray, rest: np.ndarray, gamma: Symbol, nodes: np.ndarray, weights: np.ndarray, c: int) -> np.ndarray:
    """``A0 = V0 sum_q w_q gamma'(H|_{V0 -> u_q V0})_00`` for each row."""
    n_b = rest.shape[0]
    stack = np.repeat(rest[None, :, :], len(nodes), axis=0)
    stack[:, :, c] = nodes[:, None] * v0[None, :]
    deriv = _center_derivative(stack.reshape(-1, rest.shape[1]), gamma, c).reshape(len(nodes), n_b)
    return v0 * (weights @ deriv)


def martingale_sigma2(dist: PotentialDistribution, gamma: Symbol, box_half_width: int = 24, B: int = 0,
                      quad_nodes: int = 8, n_outer: int = 400, n_inner: int = 100, seed=0) -> VarianceEstimate:
    """Nested Monte Carlo estimate of ``E{M0^2}`` on the window ``[-w, w]``, ``w = box_half_width + B``.

    For each outer draw of ``V_0..V_w`` the two conditional expectations are
    estimated with ``n_inner`` shared draws of ``V_{-w}..V_{-1}``, the second
    one also resampling ``V_0``. The ``u``-integral uses Gauss-Legendre.
    The finite inner sample inflates the estimate by about the mean inner
    variance over ``n_inner``, reported as ``inner_bias``.
    """
    if gamma.deriv is None:
        raise ValueError(f"{gamma.name} has no derivative; the martingale route needs gamma'")
    if n_inner < 2:
        raise ValueError("n_inner must be >= 2")
    if quad_nodes < 4:
        raise ValueError("quad_nodes must be >= 4")
    seed = _seed(seed)
    lo, hi = spectral_bound(dist)
    gamma.validate_on(lo, hi)
    w = box_half_width + B
    n = 2 * w + 1
    x, wt = np.polynomial.legendre.leggauss(quad_nodes)
    nodes, weights = 0.5 * (x + 1.0), 0.5 * wt

    m = np.empty(n_outer)
    inner_var = np.empty(n_outer)
    for k in range(n_outer):
        rng = seed.generator(1, k)
        right = dist.sample(rng, w + 1)
        left = dist.sample(rng, (n_inner, w))
        v0_alt = dist.sample(rng, n_inner)
        rest = np.empty((n_inner, n))
        rest[:, :w] = left
        rest[:, w:] = right
        a_fixed = _a0(np.full(n_inner, right[0]), rest, gamma, nodes, weights, w)
        a_alt = _a0(v0_alt, rest, gamma, nodes, weights, w)
        d = a_fixed - a_alt
        m[k] = d.mean()
        inner_var[k] = d.var(ddof=1)
    sq = m * m
    sigma2 = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(n_outer)) if n_outer > 1 else 0.0
    return VarianceEstimate(sigma2, se, "martingale", {
        "window_half_width": w, "quad_nodes": quad_nodes, "n_outer": n_outer, "n_inner": n_inner,
        "inner_bias": float(inner_var.mean() / n_inner),
        "M0": m,
    })


def martingale_window_scan(dist: PotentialDistribution, gamma: Symbol, widths=(12, 24, 48), **kw) -> list[VarianceEstimate]:
    """Martingale estimates for several window half-widths (convergence report)."""
    return [martingale_sigma2(dist, gamma, box_half_width=w, **kw) for w in widths]


@dataclass
class PositivityVerdict:
    passed: bool
    ratio: float
    message: str


def positivity_check(estimate: VarianceEstimate, n_se: float = 3.0) -> PositivityVerdict:
    """Pass when ``sigma2 > n_se * SE``; otherwise inconclusive."""
    s, se = estimate.sigma2, estimate.stderr
    ratio = s / se if se > 0 else (math.inf if s > 0 else 0.0)
    passed = s > n_se * se and s > 0
    msg = (f"sigma2 = {s:.6g} > {n_se:g} SE ({se:.3g})" if passed
           else f"inconclusive: sigma2 = {s:.6g}, SE = {se:.3g}")
    return PositivityVerdict(passed, ratio, msg)
