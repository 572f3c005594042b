"""Random potential ensembles, seeded sampling and finite-box Hamiltonians.

The 1D Anderson model is ``H = H0 + V`` on l2(Z) with ``(H0 u)_j = -u_{j+1} - u_{j-1}``
and an i.i.d. bounded on-site potential ``V_j``. Restricted to an integer
interval it becomes a real symmetric tridiagonal matrix with diagonal ``V``
and constant off-diagonal ``-1``.

Potential values are addressable by site: the value at site ``j`` of
realization ``r`` depends only on ``(master_seed, r, j)``. Nested boxes of one
realization therefore share their potentials, and results do not depend on the
order or parallelism in which realizations are produced.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "PotentialDistribution",
    "SeedPolicy",
    "Box",
    "TridiagonalOperator",
    "HypothesisReport",
    "HypothesisWarning",
    "sample_potential",
    "distribution_moments",
    "check_hypotheses",
    "build_hamiltonian",
    "spectral_bound",
]

_KINDS = ("uniform", "bernoulli", "discrete", "constant")

# sites per counter-based substream
SITE_BLOCK = 256


class HypothesisWarning(UserWarning):
    """A theorem hypothesis is not met by the chosen ensemble."""


@dataclass(frozen=True)
class PotentialDistribution:
    """Single-site law of the i.i.d. potential.

    Use the named constructors (:meth:`uniform`, :meth:`bernoulli`,
    :meth:`discrete`, :meth:`constant`) or :meth:`from_dict`.
    """

    kind: str
    params: tuple = ()
    values: tuple[float, ...] = field(default=(), repr=False)
    weights: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "uniform":
            (w,) = self.params
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"uniform half_width must be >= 0, got {w}")
        elif self.kind == "bernoulli":
            mag, p = self.params
            if not math.isfinite(mag) or mag <= 0:
                raise ValueError(f"bernoulli magnitude must be > 0, got {mag}")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"bernoulli prob must lie in [0, 1], got {p}")
        elif self.kind == "discrete":
            if len(self.values) == 0 or len(self.values) != len(self.weights):
                raise ValueError("discrete law needs equally many values and weights")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0):
                raise ValueError("discrete weights must be nonnegative")
            if abs(math.fsum(self.weights) - 1.0) > 1e-12:
                raise ValueError(f"discrete weights sum to {math.fsum(self.weights)!r}, not 1")
            if not all(math.isfinite(v) for v in self.values):
                raise ValueError("discrete values must be finite")
        elif self.kind == "constant":
            (c,) = self.params
            if not math.isfinite(c):
                raise ValueError("constant value must be finite")

    @classmethod
    def uniform(cls, half_width: float = 1.0) -> "PotentialDistribution":
        return cls("uniform", (float(half_width),))

    @classmethod
    def bernoulli(cls, magnitude: float, prob: float = 0.5) -> "PotentialDistribution":
        """Two-point law: ``+magnitude`` with probability ``prob``, else ``-magnitude``."""
        return cls("bernoulli", (float(magnitude), float(prob)))

    @classmethod
    def discrete(cls, values: Sequence[float], weights: Sequence[float]) -> "PotentialDistribution":
        return cls("discrete", (), tuple(float(v) for v in values), tuple(float(w) for w in weights))

    @classmethod
    def constant(cls, value: float) -> "PotentialDistribution":
        return cls("constant", (float(value),))

    @classmethod
    def from_dict(cls, spec: dict) -> "PotentialDistribution":
        """Build from a config mapping such as ``{"kind": "uniform", "half_width": 1.0}``."""
        kind = spec.get("kind")
        if kind == "uniform":
            return cls.uniform(spec.get("half_width", 1.0))
        if kind == "bernoulli":
            return cls.bernoulli(spec["magnitude"], spec.get("prob", 0.5))
        if kind == "discrete":
            return cls.discrete(spec["values"], spec["weights"])
        if kind == "constant":
            return cls.constant(spec["value"])
        raise ValueError(f"unknown distribution kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "half_width": self.params[0]}
        if self.kind == "bernoulli":
            return {"kind": "bernoulli", "magnitude": self.params[0], "prob": self.params[1]}
        if self.kind == "discrete":
            return {"kind": "discrete", "values": list(self.values), "weights": list(self.weights)}
        return {"kind": "constant", "value": self.params[0]}

    def support_points(self) -> np.ndarray:
        """Atoms of the law (the two endpoints for ``uniform``)."""
        if self.kind == "uniform":
            w = self.params[0]
            return np.array([-w, w])
        if self.kind == "bernoulli":
            mag, p = self.params
            pts = []
            if p < 1.0:
                pts.append(-mag)
            if p > 0.0:
                pts.append(mag)
            return np.array(pts)
        if self.kind == "discrete":
            return np.array([v for v, w in zip(self.values, self.weights) if w > 0])
        return np.array([self.params[0]])

    @property
    def bound(self) -> float:
        """Support bound ``max |v|`` over the support."""
        return float(np.max(np.abs(self.support_points())))

    def contains_zero(self) -> bool:
        if self.kind == "uniform":
            return True
        return bool(np.any(self.support_points() == 0.0))

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Map U(0,1) variates to this law by inverse-CDF transform."""
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            w = self.params[0]
            return w * (2.0 * u - 1.0)
        if self.kind == "bernoulli":
            mag, p = self.params
            return np.where(u < p, mag, -mag)
        if self.kind == "discrete":
            cdf = np.cumsum(self.weights)
            idx = np.searchsorted(cdf, u, side="right")
            idx = np.minimum(idx, len(self.values) - 1)
            return np.asarray(self.values)[idx]
        return np.full(u.shape, self.params[0])

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw i.i.d. values from an arbitrary generator (Monte Carlo inner loops)."""
        return self.from_uniform(rng.random(size))


def distribution_moments(dist: PotentialDistribution) -> tuple[float, float]:
    """Exact mean and variance of the single-site law."""
    if dist.kind == "uniform":
        w = dist.params[0]
        return 0.0, w * w / 3.0
    if dist.kind == "bernoulli":
        mag, p = dist.params
        return mag * (2.0 * p - 1.0), 4.0 * mag * mag * p * (1.0 - p)
    if dist.kind == "discrete":
        v = np.asarray(dist.values)
        w = np.asarray(dist.weights)
        mean = math.fsum(v * w)
        return mean, math.fsum(w * (v - mean) ** 2)
    return dist.params[0], 0.0


def spectral_bound(dist: PotentialDistribution) -> tuple[float, float]:
    """Interval ``K = [-2 - Vbar, 2 + Vbar]`` containing the spectrum of every ``H``."""
    vbar = dist.bound
    return -2.0 - vbar, 2.0 + vbar


@dataclass(frozen=True)
class SeedPolicy:
    """Counter-based seeding: one Philox substream per (realization, site block)."""

    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def generator(self, *key: int) -> np.random.Generator:
        """Independent generator addressed by a tuple of nonnegative integers."""
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.Philox(ss))

    def site_uniforms(self, realization_index: int, lo: int, hi: int) -> np.ndarray:
        """U(0,1) variates for sites ``lo..hi`` (inclusive) of one realization."""
        if hi < lo:
            raise ValueError(f"empty site interval [{lo}, {hi}]")
        first, last = lo // SITE_BLOCK, hi // SITE_BLOCK
        chunks = []
        for b in range(first, last + 1):
            # zigzag keeps negative block numbers in the nonnegative key space
            code = 2 * b if b >= 0 else -2 * b - 1
            chunks.append(self.generator(0, realization_index, code).random(SITE_BLOCK))
        u = np.concatenate(chunks)
        start = lo - first * SITE_BLOCK
        return u[start:start + hi - lo + 1]


@dataclass(frozen=True)
class Box:
    """Integer interval ``[-M, M]``."""

    M: int

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("box half-width must be nonnegative")

    @property
    def size(self) -> int:
        return 2 * self.M + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)


def sample_potential(
    dist: PotentialDistribution,
    sites: tuple[int, int] | Box,
    seed: SeedPolicy | int,
    realization_index: int = 0,
) -> np.ndarray:
    """Potential values on the inclusive site interval ``sites = (lo, hi)``.

    >>> sample_potential(PotentialDistribution.constant(0.7), (-2, 2), 0)
    array([0.7, 0.7, 0.7, 0.7, 0.7])
    """
    if isinstance(sites, Box):
        lo, hi = -sites.M, sites.M
    else:
        lo, hi = (int(s) for s in sites)
    if hi < lo:
        raise ValueError(f"empty site interval [{lo}, {hi}]")
    if realization_index < 0:
        raise ValueError("realization_index must be nonnegative")
    if not isinstance(seed, SeedPolicy):
        seed = SeedPolicy(seed)
    return dist.from_uniform(seed.site_uniforms(realization_index, lo, hi))


@dataclass(frozen=True)
class TridiagonalOperator:
    """Finite-box Hamiltonian: diagonal potential, off-diagonal hopping ``-1``."""

    diagonal: np.ndarray
    offset: int = 0

    @property
    def order(self) -> int:
        return len(self.diagonal)

    @property
    def off_diagonal(self) -> np.ndarray:
        return np.full(max(self.order - 1, 0), -1.0)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.order)

    def to_dense(self) -> np.ndarray:
        n = self.order
        h = np.diag(self.diagonal.astype(float))
        if n > 1:
            i = np.arange(n - 1)
            h[i, i + 1] = -1.0
            h[i + 1, i] = -1.0
        return h


def build_hamiltonian(potential, leftmost_site: int = 0) -> TridiagonalOperator:
    """``H = H0 + V`` restricted to ``[leftmost_site, leftmost_site + len(potential) - 1]``."""
    v = np.array(potential, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("potential must be nonempty")
    v.setflags(write=False)
    return TridiagonalOperator(v, int(leftmost_site))


@dataclass
class HypothesisReport:
    experiment_kind: str
    bounded: bool
    zero_mean: bool
    zero_in_support: bool
    nondegenerate: bool
    warnings: list[str]

    @property
    def ok(self) -> bool:
        return not self.warnings


_ENTROPY_KINDS = {"renyi", "entropy", "von_neumann"}
_FLUCTUATION_KINDS = {"clt", "asclt", "variance", "entropy", "renyi", "von_neumann"}


def check_hypotheses(dist: PotentialDistribution, experiment_kind: str, emit: bool = True) -> HypothesisReport:
    """Diagnose whether ``dist`` satisfies the hypotheses of the experiment's theorem.

    Never raises; failed hypotheses become warning strings (and
    :class:`HypothesisWarning` when ``emit`` is true).
    """
    mean, var = distribution_moments(dist)
    report = HypothesisReport(
        experiment_kind=experiment_kind,
        bounded=math.isfinite(dist.bound),
        zero_mean=abs(mean) <= 1e-14,
        zero_in_support=dist.contains_zero(),
        nondegenerate=var > 0,
        warnings=[],
    )
    if experiment_kind in _FLUCTUATION_KINDS and not report.nondegenerate:
        report.warnings.append("degenerate (zero-variance) ensemble: fluctuations vanish")
    if experiment_kind in _ENTROPY_KINDS:
        if not report.zero_mean:
            report.warnings.append(f"E V_0 = {mean:g} != 0 (entropy CLT hypothesis)")
        if not report.zero_in_support:
            report.warnings.append("0 ∉ supp F (entropy CLT hypothesis)")
    if emit:
        for msg in report.warnings:
            warnings.warn(msg, HypothesisWarning, stacklevel=2)
    return report
