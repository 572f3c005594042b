"""Monte Carlo harnesses for the Gaussian fluctuations of restricted traces.

For a box ``L = [-M, M]`` the normalized fluctuation is

    Sigma_L = |L|^{-1/2} (Tr_L phi(a_L(H)) - |L| mu),   mu = E{gamma(H)_00},

with ``gamma = phi o a``. :func:`run_clt` checks that ``Sigma_L`` over many
realizations is Gaussian, :func:`fluctuation_scan` that ``Var{Tr}/|L|``
settles, and :func:`run_asclt` follows one realization through nested boxes
and checks the logarithmic averages of ``1_Delta(Sigma_m / sigma)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, kolmogorov

from .estimators import VarianceEstimate, correlation_sum_sigma2, positivity_check, spectral_average
from .model import (PotentialDistribution, SeedPolicy, check_hypotheses, distribution_moments,
                    sample_potential)
from .symbols import Symbol, compose, fermi, renyi
from .szego import DEFAULT_BUFFER, BufferedBoxSpec, szego_trace

__all__ = [
    "SigmaSamples",
    "CltReport",
    "AscltTrajectory",
    "FluctuationPoint",
    "EntropyReport",
    "KS_THRESHOLD",
    "gaussian_cdf",
    "ks_statistic",
    "sample_traces",
    "run_clt",
    "clt_report",
    "run_asclt",
    "exact_gamma_moments",
    "fluctuation_scan",
    "entanglement_entropy_experiment",
]

# D * sqrt(n) at asymptotic p ~ 0.01
KS_THRESHOLD = 1.63


def _seed(seed) -> SeedPolicy:
    return seed if isinstance(seed, SeedPolicy) else SeedPolicy(seed)


def gaussian_cdf(x):
    """Standard normal CDF via ``erfc`` (accurate in both tails)."""
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def ks_statistic(samples, reference_cdf=gaussian_cdf) -> tuple[float, float]:
    """Two-sided one-sample Kolmogorov-Smirnov distance and asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    F = np.asarray(reference_cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    return D, float(kolmogorov(D * math.sqrt(n)))


def _map(fn, items, workers: int | None):
    items = list(items)
    if not workers or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sample_traces(dist: PotentialDistribution, a: Symbol, phi: Symbol, M: int, B: int, n: int,
                  seed=0, workers: int | None = None, first_index: int = 0) -> np.ndarray:
    """``Tr_L phi(a_L(H))`` for realizations ``first_index .. first_index + n - 1``."""
    seed = _seed(seed)
    spec = BufferedBoxSpec(M, B)

    def one(r):
        v = sample_potential(dist, (-M - B, M + B), seed, r)
        return szego_trace(v, a, phi, spec)

    return np.array(_map(one, range(first_index, first_index + n), workers))


@dataclass
class SigmaSamples:
    values: np.ndarray
    traces: np.ndarray
    centering: str
    mu_hat: float
    mu_se: float
    M: int
    B: int
    seed: int
    dist: PotentialDistribution | None = None
    a: Symbol | None = field(default=None, repr=False)
    phi: Symbol | None = field(default=None, repr=False)

    def rows(self):
        return [(i, t, s) for i, (t, s) in enumerate(zip(self.traces.tolist(), self.values.tolist()))]


@dataclass
class CltReport:
    n: int
    sigma2_hat: float
    ks_D: float | None
    ks_p: float | None
    histogram: tuple[np.ndarray, np.ndarray] | None
    centering_budget: float
    degenerate: bool

    @property
    def ks_scaled(self) -> float | None:
        return None if self.ks_D is None else self.ks_D * math.sqrt(self.n)

    @property
    def passed(self) -> bool:
        return not self.degenerate and self.ks_scaled <= KS_THRESHOLD

    @property
    def verdict(self) -> str:
        if self.degenerate:
            return "degenerate"
        return "pass" if self.passed else "fail"


def _sample_var(x: np.ndarray) -> float:
    if x.size < 2 or np.all(x == x[0]):
        return 0.0
    return float(np.var(x, ddof=1))


def clt_report(values: np.ndarray, centering_budget: float = 0.0, bins: int = 20) -> CltReport:
    """Sample variance, degeneracy flag and KS test of standardized samples against the normal law."""
    values = np.asarray(values, dtype=float)
    n = values.size
    var = _sample_var(values)
    scale = max(1.0, float(np.max(np.abs(values))) if n else 1.0)
    if var <= (1e-12 * scale) ** 2:
        return CltReport(n, var, None, None, None, centering_budget, True)
    z = (values - values.mean()) / math.sqrt(var)
    D, p = ks_statistic(z)
    return CltReport(n, var, D, p, np.histogram(z, bins=bins), centering_budget, False)


def run_clt(dist: PotentialDistribution, a: Symbol, phi: Symbol, M: int, B: int = DEFAULT_BUFFER,
            n_realizations: int = 1000, centering_mode: str = "self", seed=0,
            workers: int | None = None, n_ids: int = 20000, mu: tuple[float, float] | None = None,
            ) -> tuple[SigmaSamples, CltReport]:
    """Sample ``Sigma_L`` over independent realizations and test it for Gaussianity.

    ``centering_mode`` is ``"self"`` (subtract the sample mean of the traces)
    or ``"ids"`` (subtract ``|L| mu_hat`` with ``mu_hat`` from
    :func:`spectral_average` using ``n_ids`` windows, or from ``mu`` given as
    ``(mu_hat, se)``). In ``"ids"`` mode the report's ``centering_budget`` is
    ``|L|^{1/2} SE(mu_hat)``.
    """
    if n_realizations < 30:
        raise ValueError("run_clt needs at least 30 realizations")
    if centering_mode not in ("self", "ids"):
        raise ValueError(f"unknown centering mode {centering_mode!r}")
    seed = _seed(seed)
    size = 2 * M + 1
    traces = sample_traces(dist, a, phi, M, B, n_realizations, seed, workers)
    if centering_mode == "self":
        mu_hat, mu_se = math.fsum(traces) / (n_realizations * size), 0.0
        if np.all(traces == traces[0]):
            mu_hat = traces[0] / size
        values = (traces - traces.mean()) / math.sqrt(size)
        if np.all(traces == traces[0]):
            values = np.zeros_like(traces)
        budget = 0.0
    else:
        if mu is None:
            mu = exact_gamma_moments(dist, compose(phi, a))
            if mu is None:
                # realization indices past the trace samples keep the streams disjoint
                mu = spectral_average(dist, compose(phi, a), B, n_ids, seed,
                                      realization_index=n_realizations + 1)
            else:
                mu = (mu[0], 0.0)
        mu_hat, mu_se = mu
        values = (traces - size * mu_hat) / math.sqrt(size)
        budget = math.sqrt(size) * mu_se
    samples = SigmaSamples(values, traces, centering_mode, float(mu_hat), float(mu_se), M, B,
                           seed.master_seed, dist, a, phi)
    return samples, clt_report(values, budget)


def exact_gamma_moments(dist: PotentialDistribution, gamma: Symbol) -> tuple[float, float] | None:
    """``(E gamma_00, Var-limit sigma^2)`` when ``gamma`` is affine; ``None`` otherwise.

    For ``gamma(x) = c0 + c1 x`` the diagonal ``gamma(H)_jj = c0 + c1 V_j`` is
    i.i.d., so both quantities are explicit.
    """
    if gamma.poly is None or len(gamma.poly) > 2:
        return None
    c0 = gamma.poly[0]
    c1 = gamma.poly[1] if len(gamma.poly) == 2 else 0.0
    mean, var = distribution_moments(dist)
    return c0 + c1 * mean, c1 * c1 * var


@dataclass
class AscltTrajectory:
    m: np.ndarray
    weights: np.ndarray
    Z: np.ndarray
    intervals: list[tuple[float, float]]
    L: np.ndarray  # shape (len(m), len(intervals)); running log averages
    target: np.ndarray
    sigma: float
    mu: float
    grid: str
    centering: str = "ids"

    @property
    def final(self) -> np.ndarray:
        return self.L[-1]

    @property
    def final_error(self) -> np.ndarray:
        return np.abs(self.L[-1] - self.target)

    def rows(self):
        return [(int(m), float(z), *map(float, l)) for m, z, l in zip(self.m, self.Z, self.L)]


def _grid(M_max: int, grid_policy: str, n_geometric: int) -> tuple[np.ndarray, np.ndarray]:
    if grid_policy == "exact":
        m = np.arange(1, M_max + 1)
        return m, 1.0 / m
    if grid_policy == "geometric":
        m = np.unique(np.round(np.geomspace(1, M_max, n_geometric)).astype(int))
        lm = np.log(m)
        w = np.zeros(len(m))
        if len(m) > 1:
            # trapezoid rule for d(log m)
            steps = np.diff(lm)
            w[:-1] += 0.5 * steps
            w[1:] += 0.5 * steps
        else:
            w[:] = 1.0
        return m, w
    raise ValueError(f"unknown grid policy {grid_policy!r}")


def run_asclt(dist: PotentialDistribution, a: Symbol, phi: Symbol, M_max: int,
              grid_policy: str = "auto", B: int = DEFAULT_BUFFER,
              intervals=((-1.0, 1.0),), sigma_input: float | None = None, mu: float | None = None,
              seed=0, realization_index: int = 0, n_geometric: int = 60, n_mu: int = 40000,
              l_max: int = 50, n_sites: int = 20000, estimator_B: int = 40,
              centering: str = "ids", n_center: int = 100) -> AscltTrajectory:
    """Logarithmic averages ``L_M(Delta)`` along nested boxes ``[-m, m]`` of one realization.

    ``L_M(Delta) = sum_{m<=M} w_m 1_Delta(Z_m) / sum_{m<=M} w_m`` with
    ``Z_m = Sigma_[-m,m] / sigma``, weights ``1/m`` on the exact grid and
    trapezoidal ``d log m`` on the geometric grid. Intervals are half-open
    ``[lo, hi)``. The centering ``mu`` and ``sigma_input`` are taken from the
    exact affine formulas when available, else estimated with
    :func:`spectral_average` and :func:`correlation_sum_sigma2` (windows of
    ``2 * estimator_B + 1`` sites) on independent streams.

    ``centering="ids"`` subtracts ``(2m+1) mu``. ``centering="ensemble"``
    subtracts instead the finite-volume mean ``E{Tr_[-m,m]}``, estimated from
    ``n_center`` independent realizations; the two differ by the O(1)
    boundary contribution of the restricted trace, which is asymptotically
    negligible but dominates ``Z_m`` at small ``m``.
    """
    if sigma_input is not None and not sigma_input > 0:
        raise ValueError("sigma_input must be > 0")
    seed = _seed(seed)
    gamma = compose(phi, a)
    exact = exact_gamma_moments(dist, gamma)
    if grid_policy == "auto":
        grid_policy = "exact" if (exact is not None or M_max <= 300) else "geometric"
    if centering not in ("ids", "ensemble"):
        raise ValueError(f"unknown centering {centering!r}")
    if mu is None and centering == "ids":
        mu = exact[0] if exact is not None else spectral_average(
            dist, gamma, estimator_B, n_mu, seed, realization_index=realization_index + 1)[0]
    if sigma_input is None:
        if exact is not None:
            sigma_input = math.sqrt(exact[1])
        else:
            est = correlation_sum_sigma2(dist, gamma, l_max=l_max, B=estimator_B, n_sites=n_sites, seed=seed,
                                         realization_index=realization_index + 2)
            sigma_input = math.sqrt(max(est.sigma2, 0.0))
        if not sigma_input > 0:
            raise ValueError("estimated sigma is not positive; supply sigma_input")
    ms, w = _grid(M_max, grid_policy, n_geometric)
    c = M_max + B

    def nested_traces(r):
        v = sample_potential(dist, (-M_max - B, M_max + B), seed, r)
        return np.array([szego_trace(v[c - m - B: c + m + B + 1], a, phi, BufferedBoxSpec(int(m), B))
                         for m in ms])

    sizes = 2 * ms + 1
    tr = nested_traces(realization_index)
    if centering == "ids":
        center = sizes * mu
    else:
        # streams past the mu/sigma estimators
        ens = np.array([nested_traces(realization_index + 3 + k) for k in range(n_center)])
        center = ens.mean(axis=0)
        mu = float(np.mean(center / sizes))
    Z = (tr - center) / np.sqrt(sizes) / sigma_input
    ivs = [(float(lo), float(hi)) for lo, hi in intervals]
    ind = np.array([[lo <= z < hi for lo, hi in ivs] for z in Z], dtype=float)
    L = np.cumsum(w[:, None] * ind, axis=0) / np.cumsum(w)[:, None]
    target = np.array([gaussian_cdf(hi) - gaussian_cdf(lo) for lo, hi in ivs])
    return AscltTrajectory(ms, w, Z, ivs, L, target, float(sigma_input), float(mu), grid_policy, centering)


@dataclass
class FluctuationPoint:
    M: int
    ratio: float
    se: float
    traces: np.ndarray = field(repr=False)

    @property
    def estimate(self) -> VarianceEstimate:
        return VarianceEstimate(self.ratio, self.se, "fluctuation", {"M": self.M, "n": len(self.traces)})


def fluctuation_scan(dist: PotentialDistribution, a: Symbol, phi: Symbol, M_list, B: int = DEFAULT_BUFFER,
                     n_per_M: int = 400, seed=0, workers: int | None = None) -> list[FluctuationPoint]:
    """``Var{Tr_L phi(a_L(H))} / |L|`` for each ``M`` (Gaussian-theory standard error)."""
    M_list = list(M_list)
    if M_list != sorted(M_list):
        raise ValueError("M_list must be ascending")
    out = []
    for M in M_list:
        tr = sample_traces(dist, a, phi, M, B, n_per_M, seed, workers)
        ratio = _sample_var(tr) / (2 * M + 1)
        out.append(FluctuationPoint(M, ratio, ratio * math.sqrt(2.0 / (n_per_M - 1)), tr))
    return out


@dataclass
class EntropyReport:
    alpha: float
    beta: float
    fermi_energy: float
    volume_coefficient: float
    volume_se: float
    scan: list[FluctuationPoint]
    sigma2: VarianceEstimate
    positive: bool
    clt: CltReport | None
    warnings: list[str]


def entanglement_entropy_experiment(dist: PotentialDistribution, alpha: float, beta: float,
                                    fermi_energy: float = 0.0, M_list=(32, 64, 128), B: int = DEFAULT_BUFFER,
                                    n: int = 400, seed=0, n_mu: int = 20000,
                                    workers: int | None = None) -> EntropyReport:
    """Renyi entanglement entropy of free fermions at inverse temperature ``beta``.

    Reports the per-site volume-law coefficient ``E{r_alpha(n_F(H))_00}``, the
    fluctuation scan, the plateau variance with its positivity check and the
    KS verdict at the largest box.
    """
    a = fermi(beta, fermi_energy)
    phi = renyi(alpha)
    hyp = check_hypotheses(dist, "entropy", emit=False)
    mu, mu_se = spectral_average(dist, compose(phi, a), B, n_mu, seed, realization_index=10**6)
    scan = fluctuation_scan(dist, a, phi, M_list, B, n, seed, workers)
    last = scan[-1]
    est = last.estimate
    clt = None
    if n >= 30:
        size = 2 * last.M + 1
        clt = clt_report((last.traces - last.traces.mean()) / math.sqrt(size))
    return EntropyReport(float(alpha), float(beta), float(fermi_energy), mu, mu_se, scan, est,
                         positivity_check(est).passed, clt, hyp.warnings)
